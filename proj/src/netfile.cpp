#include "asyncnet/netfile.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"

namespace asyncnet {

namespace {

constexpr std::string_view kHeader = "asyncnet v1";

const std::set<std::string, std::less<>> kSections = {"constants", "nodes",    "structures",    "fields",  "events",
                                                      "functional", "initial", "event_regions", "dynamics"};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

// Splits at `sep` outside brackets and parentheses.
std::vector<std::string> split_top(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    else if (c == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  NetworkDocument run() {
    std::istringstream in{std::string(text_)};
    std::string raw;
    bool header = false;
    while (std::getline(in, raw)) {
      ++line_;
      auto hash = raw.find('#');
      std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (s.empty()) continue;
      if (!header) {
        if (s != kHeader) fail("expected header '" + std::string(kHeader) + "'");
        header = true;
        continue;
      }
      if (section_header(s)) continue;
      if (section_.empty()) fail("content outside of a section");
      content(s);
    }
    if (!header) fail("empty document; expected header '" + std::string(kHeader) + "'");
    for (const auto& e : doc_.events)
      if (e.default_structure.empty()) {
        line_ = e.line;
        fail("events section has no 'default' line");
      }
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + msg);
  }

  Expression expr(std::string_view src) const {
    try {
      return parse(src);
    } catch (const SyntaxError& e) {
      fail(std::string("in expression '") + std::string(src) + "': " + e.what());
    }
  }

  std::string ident(std::string_view s, const char* what) const {
    std::string t = trim(s);
    if (!is_identifier(t)) fail(std::string("expected ") + what + ", got '" + t + "'");
    return t;
  }

  double number(std::string_view s) const {
    Expression e = expr(s);
    std::map<std::string, double> env;
    for (const auto& [name, value] : constants_) env[name] = value;
    env["pi"] = circle::kPi;
    try {
      return evaluate_real(e, env);
    } catch (const std::exception& ex) {
      fail(std::string("cannot evaluate '") + std::string(s) + "': " + ex.what());
    }
  }

  bool section_header(const std::string& s) {
    if (s.find(':') != std::string::npos || s.find('=') != std::string::npos) return false;
    auto space = s.find_first_of(" \t");
    std::string word = s.substr(0, space);
    if (!kSections.count(word)) return false;
    std::string rest = space == std::string::npos ? "" : trim(s.substr(space));
    section_ = word;
    if (word == "events") {
      EventsDecl ev;
      ev.line = line_;
      if (!rest.empty())
        for (const auto& o : split_top(rest, ',')) ev.owners.push_back(ident(o, "node name"));
      doc_.events.push_back(std::move(ev));
    } else if (word == "dynamics") {
      if (doc_.dynamics) fail("duplicate dynamics section");
      if (rest != "rendezvous") fail("unknown dynamics '" + rest + "' (supported: rendezvous)");
      doc_.dynamics = DynamicsDecl{rest, {}, line_};
    } else if (!rest.empty()) {
      fail("unexpected text after section name '" + word + "'");
    }
    return true;
  }

  std::pair<std::string, std::string> labelled(const std::string& s) const {
    auto colon = s.find(':');
    if (colon == std::string::npos) fail("expected '<name>: ...'");
    return {ident(s.substr(0, colon), "name"), trim(s.substr(colon + 1))};
  }

  void content(const std::string& s) {
    if (section_ == "constants") {
      auto eq = s.find('=');
      if (eq == std::string::npos) fail("expected '<name> = <value>'");
      std::string name = ident(s.substr(0, eq), "constant name");
      std::string rhs = trim(s.substr(eq + 1));
      constants_[name] = number(rhs);
      doc_.constants.emplace_back(name, expr(rhs));
    } else if (section_ == "nodes") {
      auto [name, rest] = labelled(s);
      NodeDecl node{name, {}, line_};
      for (const auto& part : split_top(rest, ',')) node.components.push_back(component(part));
      if (node.components.empty()) fail("node '" + name + "' has no components");
      doc_.nodes.push_back(std::move(node));
    } else if (section_ == "structures") {
      auto [name, rest] = labelled(s);
      StructureDecl st{name, {}, line_};
      if (!rest.empty()) {
        for (const auto& part : split_top(rest, ',')) {
          auto both = part.find("<->");
          if (both != std::string::npos) {
            std::string a = endpoint(part.substr(0, both)), b = endpoint(part.substr(both + 3));
            st.edges.push_back({a, b});
            st.edges.push_back({b, a});
            continue;
          }
          auto arrow = part.find("->");
          if (arrow == std::string::npos) fail("expected an edge 'a -> b', got '" + part + "'");
          st.edges.push_back({endpoint(part.substr(0, arrow)), endpoint(part.substr(arrow + 2))});
        }
      }
      doc_.structures.push_back(std::move(st));
    } else if (section_ == "fields") {
      auto [name, rest] = labelled(s);
      FieldDecl f{name, {}, line_};
      for (const auto& part : split_top(rest, ';')) {
        if (part.empty()) continue;
        auto eq = part.find('=');
        if (eq == std::string::npos) fail("expected \"<coordinate>' = <expression>\"");
        std::string lhs = trim(part.substr(0, eq));
        if (lhs.empty() || lhs.back() != '\'') fail("field component must be written \"x' = ...\"");
        f.components.emplace_back(ident(lhs.substr(0, lhs.size() - 1), "coordinate"), expr(part.substr(eq + 1)));
      }
      doc_.fields.push_back(std::move(f));
    } else if (section_ == "events") {
      EventsDecl& ev = doc_.events.back();
      if (!ev.default_structure.empty()) fail("nothing may follow the 'default' line of an events section");
      if (s.rfind("when ", 0) == 0) {
        auto use = s.rfind(" use ");
        if (use == std::string::npos || use < 5) fail("expected 'when <predicate> use <structure>'");
        ev.guards.push_back(Guard{expr(s.substr(5, use - 5)), ident(s.substr(use + 5), "structure name")});
      } else if (s.rfind("default ", 0) == 0) {
        ev.default_structure = ident(s.substr(8), "structure name");
      } else {
        fail("expected 'when ... use ...' or 'default ...'");
      }
    } else if (section_ == "functional") {
      auto [name, rest] = labelled(s);
      LevelDecl lv{name, {}, {}, line_};
      bool has_init = false, has_term = false;
      for (const auto& part : split_top(rest, ';')) {
        if (part.rfind("init ", 0) == 0) {
          lv.init = expr(part.substr(5));
          has_init = true;
        } else if (part.rfind("term ", 0) == 0) {
          lv.term = expr(part.substr(5));
          has_term = true;
        } else {
          fail("expected 'init <expr>; term <expr>'");
        }
      }
      if (!has_init || !has_term) fail("node '" + name + "' needs both init and term");
      doc_.functional.push_back(std::move(lv));
    } else if (section_ == "initial") {
      for (const auto& part : split_top(s, ';')) {
        if (part.empty()) continue;
        auto eq = part.find('=');
        if (eq == std::string::npos) fail("expected '<coordinate> = <value>'");
        doc_.initial.emplace_back(ident(part.substr(0, eq), "coordinate"), expr(part.substr(eq + 1)));
      }
    } else if (section_ == "event_regions") {
      auto [name, rest] = labelled(s);
      RegionDecl r{name, {}, line_};
      for (const auto& part : split_top(rest, ',')) {
        auto open = part.find('[');
        if (open == std::string::npos || part.back() != ']') fail("expected '<node> [entry, exit]'");
        auto bounds = split_top(part.substr(open + 1, part.size() - open - 2), ',');
        if (bounds.size() != 2) fail("expected '<node> [entry, exit]'");
        r.spans.push_back({ident(part.substr(0, open), "node name"), number(bounds[0]), number(bounds[1])});
      }
      doc_.regions.push_back(std::move(r));
    } else if (section_ == "dynamics") {
      if (s.rfind("speed ", 0) != 0) fail("expected 'speed <node> = <value>'");
      auto eq = s.find('=');
      if (eq == std::string::npos) fail("expected 'speed <node> = <value>'");
      doc_.dynamics->speeds.emplace_back(ident(s.substr(6, eq - 6), "node name"), number(s.substr(eq + 1)));
    }
  }

  std::string endpoint(std::string_view s) const {
    std::string t = trim(s);
    if (t == "0") return t;
    return ident(t, "node name or 0");
  }

  ComponentDecl component(const std::string& part) const {
    auto space = part.find_first_of(" \t");
    if (space == std::string::npos) fail("expected '<name> circle' or '<name> in [lo, hi]'");
    ComponentDecl c;
    c.name = ident(part.substr(0, space), "coordinate name");
    std::string rest = trim(part.substr(space));
    if (rest == "circle") {
      c.circle = true;
      return c;
    }
    if (rest.rfind("in", 0) != 0) fail("expected 'circle' or 'in [lo, hi]' after '" + c.name + "'");
    rest = trim(rest.substr(2));
    if (rest.size() < 2 || rest.front() != '[' || rest.back() != ']') fail("expected '[lo, hi]'");
    auto bounds = split_top(rest.substr(1, rest.size() - 2), ',');
    if (bounds.size() != 2) fail("expected '[lo, hi]'");
    c.lo = expr(bounds[0]);
    c.hi = expr(bounds[1]);
    return c;
  }

  std::string_view text_;
  std::string origin_;
  int line_ = 0;
  std::string section_;
  std::map<std::string, double> constants_;
  NetworkDocument doc_;
};

class Builder {
 public:
  Builder(const NetworkDocument& doc, std::string origin) : doc_(doc), origin_(std::move(origin)) {}

  LoadedNetwork run() {
    LoadedNetwork out;
    out.doc = doc_;
    for (const auto& [name, e] : doc_.constants) {
      if (constants_.count(name)) fail(0, "duplicate constant '" + name + "'");
      constants_[name] = value(e, 0);
    }
    out.constants = constants_;

    std::vector<NodeSpec> nodes;
    for (const auto& n : doc_.nodes) {
      NodeSpec spec{n.name, {}};
      for (const auto& c : n.components)
        spec.components.push_back(c.circle ? PhaseComponent::circle(c.name)
                                           : PhaseComponent::interval(c.name, value(c.lo, n.line), value(c.hi, n.line)));
      nodes.push_back(std::move(spec));
    }
    int nodes_line = doc_.nodes.empty() ? 0 : doc_.nodes.front().line;
    PhaseSpace space = guarded(nodes_line, [&] { return PhaseSpace(std::move(nodes)); });

    if (!doc_.regions.empty()) {
      std::vector<EventRegion> regions;
      for (const auto& r : doc_.regions) {
        EventRegion e{r.name, {}};
        for (const auto& sp : r.spans) e.intervals.push_back({node_id(space, sp.node, r.line), sp.entry, sp.exit});
        regions.push_back(std::move(e));
      }
      out.events.emplace(guarded(doc_.regions.front().line,
                                 [&] { return EventStructuredNetwork(space.node_count(), std::move(regions)); }));
    }

    if (doc_.dynamics) {
      const DynamicsDecl& dyn = *doc_.dynamics;
      if (!doc_.structures.empty() || !doc_.fields.empty() || !doc_.events.empty() || !doc_.functional.empty())
        fail(dyn.line, "rendezvous dynamics are generated; remove structures, fields, events and functional");
      if (!out.events) fail(dyn.line, "rendezvous dynamics need event_regions");
      std::vector<double> speeds(space.node_count(), 1.0);
      for (const auto& [node, v] : dyn.speeds) speeds[static_cast<std::size_t>(node_id(space, node, dyn.line) - 1)] = v;
      out.rendezvous = RendezvousModel{space, speeds};
      out.functional.emplace(guarded(dyn.line, [&] { return rendezvous_monolithic(*out.rendezvous, *out.events); }));
      out.net.emplace(out.functional->first().net);
    } else {
      out.net.emplace(network(space));
      if (!doc_.functional.empty()) out.functional.emplace(functional(*out.net));
    }

    if (!doc_.initial.empty()) out.initial = initial(space);
    return out;
  }

 private:
  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  template <class F>
  auto guarded(int line, F&& f) const -> decltype(f()) {
    try {
      return f();
    } catch (const CyclicPrecedence&) {
      throw;
    } catch (const ConfigError& e) {
      fail(line, e.what());
    } catch (const EvalError& e) {
      fail(line, e.what());
    }
  }

  double value(const Expression& e, int line) const {
    std::map<std::string, double> env = constants_;
    env["pi"] = circle::kPi;
    return guarded(line, [&] { return evaluate_real(e, env); });
  }

  int node_id(const PhaseSpace& space, const std::string& name, int line) const {
    auto id = space.find_node(name);
    if (!id) fail(line, "unknown node '" + name + "'");
    return *id;
  }

  AsyncNetwork network(const PhaseSpace& space) const {
    if (doc_.events.empty()) fail(0, "missing events section");
    if (doc_.structures.empty()) fail(0, "missing structures section");

    std::vector<Block> blocks(doc_.events.size());
    std::vector<int> block_of(space.node_count() + 1, -1);
    for (std::size_t b = 0; b < doc_.events.size(); ++b) {
      const EventsDecl& ev = doc_.events[b];
      if (ev.owners.empty()) {
        if (doc_.events.size() > 1) fail(ev.line, "with several events sections each must name its nodes");
        for (int id = 1; id <= static_cast<int>(space.node_count()); ++id) blocks[b].nodes.push_back(id);
      } else {
        for (const auto& o : ev.owners) blocks[b].nodes.push_back(node_id(space, o, ev.line));
      }
      for (int id : blocks[b].nodes) block_of[static_cast<std::size_t>(id)] = static_cast<int>(b);
      blocks[b].events.guards = ev.guards;
      blocks[b].events.default_structure = ev.default_structure;
    }

    std::map<std::string, const FieldDecl*> fields;
    for (const auto& f : doc_.fields)
      if (!fields.emplace(f.structure, &f).second) fail(f.line, "duplicate field for '" + f.structure + "'");
    std::set<std::string> names;
    for (const auto& st : doc_.structures) {
      if (!names.insert(st.name).second) fail(st.line, "duplicate structure '" + st.name + "'");
      auto it = fields.find(st.name);
      if (it == fields.end()) fail(st.line, "structure '" + st.name + "' has no field");
      const FieldDecl& f = *it->second;
      AdmissibleField field{st.name, {}};
      int block = -1;
      for (const auto& [coord, e] : f.components) {
        auto slot = space.find_coordinate(coord);
        if (!slot || space.component_at(*slot).name != coord) fail(f.line, "unknown coordinate '" + coord + "'");
        int owner = block_of[static_cast<std::size_t>(space.node_of_slot(*slot))];
        if (block != -1 && owner != block)
          fail(f.line, "field '" + st.name + "' spans nodes of different events sections");
        block = owner;
        if (!field.components.emplace(coord, e).second) fail(f.line, "coordinate '" + coord + "' given twice");
      }
      if (block == -1) fail(f.line, "field '" + st.name + "' is empty");
      ConnectionStructure alpha{st.name, {}};
      for (const auto& e : st.edges) {
        int from = e.from == "0" ? kConstrainingNode : node_id(space, e.from, st.line);
        alpha.edges.insert(Edge{from, node_id(space, e.to, st.line)});
      }
      blocks[static_cast<std::size_t>(block)].structures.push_back(std::move(alpha));
      blocks[static_cast<std::size_t>(block)].fields.push_back(std::move(field));
    }
    for (const auto& f : doc_.fields)
      if (!names.count(f.structure)) fail(f.line, "field for undeclared structure '" + f.structure + "'");

    int line = doc_.events.front().line;
    return guarded(line, [&] { return AsyncNetwork(space, constants_, std::move(blocks)); });
  }

  FunctionalNetwork functional(const AsyncNetwork& net) const {
    const PhaseSpace& space = net.space();
    std::vector<std::optional<Expression>> init(space.node_count()), term(space.node_count());
    for (const auto& lv : doc_.functional) {
      std::size_t i = static_cast<std::size_t>(node_id(space, lv.node, lv.line) - 1);
      if (init[i]) fail(lv.line, "node '" + lv.node + "' listed twice");
      init[i] = lv.init;
      term[i] = lv.term;
    }
    std::vector<Expression> in, te;
    for (std::size_t i = 0; i < init.size(); ++i) {
      if (!init[i]) fail(doc_.functional.front().line, "functional section misses node '" + space.node(static_cast<int>(i + 1)).name + "'");
      in.push_back(*init[i]);
      te.push_back(*term[i]);
    }
    return guarded(doc_.functional.front().line, [&] { return FunctionalNetwork(net, in, te); });
  }

  NetworkState initial(const PhaseSpace& space) const {
    std::vector<std::optional<double>> coords(space.dimension());
    for (const auto& [name, e] : doc_.initial) {
      auto slot = space.find_coordinate(name);
      if (!slot) fail(0, "initial value for unknown coordinate '" + name + "'");
      coords[*slot] = value(e, 0);
    }
    std::vector<double> x;
    for (std::size_t s = 0; s < coords.size(); ++s) {
      if (!coords[s]) fail(0, "initial section misses coordinate '" + space.component_at(s).name + "'");
      x.push_back(*coords[s]);
    }
    return guarded(0, [&] { return make_state(space, std::move(x)); });
  }

  const NetworkDocument& doc_;
  std::string origin_;
  Constants constants_;
};

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

NetworkDocument parse_document(std::string_view text, const std::string& origin) {
  return Parser(text, origin).run();
}

std::string serialize(const NetworkDocument& doc) {
  std::ostringstream out;
  out << kHeader << "\n";
  if (!doc.constants.empty()) {
    out << "\nconstants\n";
    for (const auto& [name, e] : doc.constants) out << "  " << name << " = " << print(e) << "\n";
  }
  if (!doc.nodes.empty()) {
    out << "\nnodes\n";
    for (const auto& n : doc.nodes) {
      out << "  " << n.name << ":";
      for (std::size_t c = 0; c < n.components.size(); ++c) {
        const auto& comp = n.components[c];
        out << (c ? ", " : " ") << comp.name;
        if (comp.circle) out << " circle";
        else out << " in [" << print(comp.lo) << ", " << print(comp.hi) << "]";
      }
      out << "\n";
    }
  }
  if (!doc.structures.empty()) {
    out << "\nstructures\n";
    for (const auto& s : doc.structures) {
      out << "  " << s.name << ":";
      for (std::size_t e = 0; e < s.edges.size(); ++e)
        out << (e ? ", " : " ") << s.edges[e].from << " -> " << s.edges[e].to;
      out << "\n";
    }
  }
  if (!doc.fields.empty()) {
    out << "\nfields\n";
    for (const auto& f : doc.fields) {
      out << "  " << f.structure << ":";
      for (std::size_t c = 0; c < f.components.size(); ++c)
        out << (c ? "; " : " ") << f.components[c].first << "' = " << print(f.components[c].second);
      out << "\n";
    }
  }
  for (const auto& ev : doc.events) {
    out << "\nevents";
    for (std::size_t o = 0; o < ev.owners.size(); ++o) out << (o ? ", " : " ") << ev.owners[o];
    out << "\n";
    for (const auto& g : ev.guards) out << "  when " << print(g.predicate) << " use " << g.target << "\n";
    out << "  default " << ev.default_structure << "\n";
  }
  if (!doc.functional.empty()) {
    out << "\nfunctional\n";
    for (const auto& lv : doc.functional)
      out << "  " << lv.node << ": init " << print(lv.init) << "; term " << print(lv.term) << "\n";
  }
  if (!doc.initial.empty()) {
    out << "\ninitial\n";
    for (const auto& [name, e] : doc.initial) out << "  " << name << " = " << print(e) << "\n";
  }
  if (!doc.regions.empty()) {
    out << "\nevent_regions\n";
    for (const auto& r : doc.regions) {
      out << "  " << r.name << ":";
      for (std::size_t s = 0; s < r.spans.size(); ++s)
        out << (s ? ", " : " ") << r.spans[s].node << " [" << format_number(r.spans[s].entry) << ", "
            << format_number(r.spans[s].exit) << "]";
      out << "\n";
    }
  }
  if (doc.dynamics) {
    out << "\ndynamics " << doc.dynamics->kind << "\n";
    for (const auto& [node, v] : doc.dynamics->speeds) out << "  speed " << node << " = " << format_number(v) << "\n";
  }
  return out.str();
}

LoadedNetwork build(const NetworkDocument& doc, const std::string& origin) { return Builder(doc, origin).run(); }

LoadedNetwork load_text(std::string_view text, const std::string& origin) {
  return build(parse_document(text, origin), origin);
}

LoadedNetwork load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_text(buf.str(), path.string());
}

NetworkDocument to_document(const AsyncNetwork& net, const std::vector<Expression>* init,
                            const std::vector<Expression>* term, const NetworkState* initial) {
  const PhaseSpace& space = net.space();
  NetworkDocument doc;
  for (const auto& [name, v] : net.constants()) doc.constants.emplace_back(name, Expression::literal(v));
  for (const auto& n : space.nodes()) {
    NodeDecl d{n.name, {}, 0};
    for (const auto& c : n.components)
      d.components.push_back(ComponentDecl{c.name, c.is_circle(), Expression::literal(c.is_circle() ? 0.0 : c.lo),
                                           Expression::literal(c.is_circle() ? 0.0 : c.hi)});
    doc.nodes.push_back(std::move(d));
  }
  auto node_name = [&](int id) { return id == kConstrainingNode ? std::string("0") : space.node(id).name; };
  std::set<std::string> names;
  const bool several = net.blocks().size() > 1;
  for (const auto& b : net.blocks()) {
    for (std::size_t s = 0; s < b.structures.size(); ++s) {
      const auto& alpha = b.structures[s];
      if (!names.insert(alpha.name).second)
        throw ConfigError("structure name '" + alpha.name + "' is used by two event maps; cannot serialize");
      StructureDecl sd{alpha.name, {}, 0};
      for (const Edge& e : alpha.edges) sd.edges.push_back({node_name(e.from), node_name(e.to)});
      doc.structures.push_back(std::move(sd));
      FieldDecl fd{alpha.name, {}, 0};
      for (int id : b.nodes)
        for (const auto& c : space.node(id).components) fd.components.emplace_back(c.name, b.fields[s].components.at(c.name));
      doc.fields.push_back(std::move(fd));
    }
    EventsDecl ev;
    if (several)
      for (int id : b.nodes) ev.owners.push_back(space.node(id).name);
    ev.guards = b.events.guards;
    ev.default_structure = b.events.default_structure;
    doc.events.push_back(std::move(ev));
  }
  if (init && term)
    for (std::size_t i = 0; i < space.node_count(); ++i)
      doc.functional.push_back(LevelDecl{space.node(static_cast<int>(i + 1)).name, (*init)[i], (*term)[i], 0});
  if (initial)
    for (std::size_t s = 0; s < space.dimension(); ++s)
      doc.initial.emplace_back(space.component_at(s).name, Expression::literal(initial->coords[s]));
  return doc;
}

NetworkDocument to_document(const FunctionalNetwork& fn, const NetworkState* initial) {
  if (fn.stage_count() != 1) throw ConfigError("a concatenated network has no single-file form");
  return to_document(fn.first().net, &fn.first().init, &fn.first().term, initial);
}

}  // namespace asyncnet
