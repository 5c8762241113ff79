#pragma once

// Network description files (header "asyncnet v1"): a line-based document
// model, its parser and printer, and the builder that turns a document into
// networks.
//
//   asyncnet v1
//   constants
//     a = 1
//   nodes
//     T1: x1 in [-a, b], th1 circle
//   structures
//     beta: 0 -> T1, T1 <-> T2
//   fields
//     beta: x1' = 0; th1' = omega + sin(th2 - th1)
//   events [owner, ...]
//     when <predicate> use <structure>
//     default <structure>
//   functional
//     T1: init x1 + a; term x1 - b
//   initial
//     x1 = -a; th1 = 0
//   event_regions
//     a: N1 [0.1, 0.2], N2 [0.1, 0.2]
//   dynamics rendezvous
//     speed N1 = 2
//
// '#' starts a comment. Edges from the constraining node are written "0 -> T1".

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asyncnet/factorize.hpp"
#include "asyncnet/rendezvous.hpp"

namespace asyncnet {

struct ComponentDecl {
  std::string name;
  bool circle = false;
  Expression lo, hi;
  friend bool operator==(const ComponentDecl&, const ComponentDecl&) = default;
};

struct NodeDecl {
  std::string name;
  std::vector<ComponentDecl> components;
  int line = 0;
  friend bool operator==(const NodeDecl& a, const NodeDecl& b) {
    return a.name == b.name && a.components == b.components;
  }
};

struct EdgeDecl {
  std::string from;  // "0" for the constraining node
  std::string to;
  friend bool operator==(const EdgeDecl&, const EdgeDecl&) = default;
};

struct StructureDecl {
  std::string name;
  std::vector<EdgeDecl> edges;
  int line = 0;
  friend bool operator==(const StructureDecl& a, const StructureDecl& b) {
    return a.name == b.name && a.edges == b.edges;
  }
};

struct FieldDecl {
  std::string structure;
  std::vector<std::pair<std::string, Expression>> components;
  int line = 0;
  friend bool operator==(const FieldDecl& a, const FieldDecl& b) {
    return a.structure == b.structure && a.components == b.components;
  }
};

struct EventsDecl {
  std::vector<std::string> owners;  // empty: every node
  std::vector<Guard> guards;
  std::string default_structure;
  int line = 0;
  friend bool operator==(const EventsDecl& a, const EventsDecl& b) {
    return a.owners == b.owners && a.guards == b.guards && a.default_structure == b.default_structure;
  }
};

struct LevelDecl {
  std::string node;
  Expression init, term;
  int line = 0;
  friend bool operator==(const LevelDecl& a, const LevelDecl& b) {
    return a.node == b.node && a.init == b.init && a.term == b.term;
  }
};

struct RegionDecl {
  struct Span {
    std::string node;
    double entry = 0.0;
    double exit = 0.0;
    friend bool operator==(const Span&, const Span&) = default;
  };
  std::string name;
  std::vector<Span> spans;
  int line = 0;
  friend bool operator==(const RegionDecl& a, const RegionDecl& b) { return a.name == b.name && a.spans == b.spans; }
};

struct DynamicsDecl {
  std::string kind;
  std::vector<std::pair<std::string, double>> speeds;
  int line = 0;
  friend bool operator==(const DynamicsDecl& a, const DynamicsDecl& b) {
    return a.kind == b.kind && a.speeds == b.speeds;
  }
};

struct NetworkDocument {
  std::vector<std::pair<std::string, Expression>> constants;
  std::vector<NodeDecl> nodes;
  std::vector<StructureDecl> structures;
  std::vector<FieldDecl> fields;
  std::vector<EventsDecl> events;
  std::vector<LevelDecl> functional;
  std::vector<std::pair<std::string, Expression>> initial;
  std::vector<RegionDecl> regions;
  std::optional<DynamicsDecl> dynamics;
  friend bool operator==(const NetworkDocument&, const NetworkDocument&) = default;
};

/// Throws ConfigError with "origin:line: message" on malformed input.
NetworkDocument parse_document(std::string_view text, const std::string& origin = "<input>");
std::string serialize(const NetworkDocument& doc);

struct LoadedNetwork {
  NetworkDocument doc;
  Constants constants;
  std::optional<AsyncNetwork> net;
  std::optional<FunctionalNetwork> functional;
  std::optional<NetworkState> initial;
  std::optional<EventStructuredNetwork> events;
  std::optional<RendezvousModel> rendezvous;

  const AsyncNetwork& network() const { return *net; }
};

LoadedNetwork build(const NetworkDocument& doc, const std::string& origin = "<input>");
LoadedNetwork load_text(std::string_view text, const std::string& origin = "<input>");
LoadedNetwork load_file(const std::filesystem::path& path);

/// Document describing `net` (constants and bounds written as numbers).
/// Structure names must be unique across event maps.
NetworkDocument to_document(const AsyncNetwork& net, const std::vector<Expression>* init = nullptr,
                            const std::vector<Expression>* term = nullptr, const NetworkState* initial = nullptr);
NetworkDocument to_document(const FunctionalNetwork& fn, const NetworkState* initial = nullptr);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

}  // namespace asyncnet
