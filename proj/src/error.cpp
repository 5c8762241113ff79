#include "asyncnet/error.hpp"

namespace asyncnet {

namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected,
                         const std::string& message)
    : ConfigError("syntax error at offset " + std::to_string(offset) + ": " + message +
                  (expected.empty() ? std::string() : " (expected " + join(expected, ", ") + ")")),
      offset_(offset),
      expected_(std::move(expected)) {}

CyclicPrecedence::CyclicPrecedence(std::vector<std::string> cycle)
    : ConfigError("cyclic precedence: " + join(cycle, " -> ")), cycle_(std::move(cycle)) {}

}  // namespace asyncnet
