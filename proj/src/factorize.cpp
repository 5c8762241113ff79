#include "asyncnet/factorize.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "asyncnet/error.hpp"

namespace asyncnet {

const ProgressInterval* EventRegion::on(int node) const {
  for (const auto& iv : intervals)
    if (iv.node == node) return &iv;
  return nullptr;
}

std::vector<int> EventRegion::nodes() const {
  std::vector<int> out;
  for (const auto& iv : intervals) out.push_back(iv.node);
  return out;
}

namespace {

// Returns a cycle (event indices, first repeated at the end) or empty.
std::vector<std::size_t> find_cycle(const Precedence& g) {
  const std::size_t n = g.size();
  std::vector<int> color(n, 0);
  std::vector<std::size_t> parent(n, n);
  std::vector<std::size_t> cycle;
  std::function<bool(std::size_t)> dfs = [&](std::size_t u) {
    color[u] = 1;
    for (std::size_t v = 0; v < n; ++v) {
      if (!g[u][v]) continue;
      if (color[v] == 1) {
        cycle.push_back(v);
        for (std::size_t w = u; w != v; w = parent[w]) cycle.push_back(w);
        cycle.push_back(v);
        std::reverse(cycle.begin(), cycle.end());
        return true;
      }
      if (color[v] == 0) {
        parent[v] = u;
        if (dfs(v)) return true;
      }
    }
    color[u] = 2;
    return false;
  };
  for (std::size_t u = 0; u < n; ++u)
    if (color[u] == 0 && dfs(u)) break;
  return cycle;
}

// Longest chain ending at each event (1 for minimal events).
std::vector<std::size_t> depth_from_sources(const Precedence& direct) {
  const std::size_t n = direct.size();
  std::vector<std::size_t> depth(n, 0);
  std::vector<std::size_t> indeg(n, 0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (direct[u][v]) ++indeg[v];
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) {
      ready.push_back(v);
      depth[v] = 1;
    }
  while (!ready.empty()) {
    std::size_t u = ready.back();
    ready.pop_back();
    for (std::size_t v = 0; v < n; ++v) {
      if (!direct[u][v]) continue;
      depth[v] = std::max(depth[v], depth[u] + 1);
      if (--indeg[v] == 0) ready.push_back(v);
    }
  }
  return depth;
}

Precedence transpose(const Precedence& g) {
  Precedence t(g.size(), std::vector<bool>(g.size(), false));
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t v = 0; v < g.size(); ++v) t[v][u] = g[u][v];
  return t;
}

std::vector<std::vector<double>> layer_boundaries(const EventStructuredNetwork& esn,
                                                  const std::vector<std::size_t>& layer_of, std::size_t q) {
  const std::size_t k = esn.node_count();
  const auto& events = esn.events();
  std::vector<std::vector<double>> b(q + 1, std::vector<double>(k, 0.0));
  std::fill(b[q].begin(), b[q].end(), 1.0);
  for (std::size_t i = 0; i < k; ++i) {
    int node = static_cast<int>(i + 1);
    std::vector<double> lo(q + 1, 0.0), hi(q + 1, 1.0);
    for (std::size_t cut = 1; cut < q; ++cut) {
      for (std::size_t e = 0; e < events.size(); ++e) {
        const ProgressInterval* iv = events[e].on(node);
        if (!iv) continue;
        if (layer_of[e] < cut) lo[cut] = std::max(lo[cut], iv->exit);
        else hi[cut] = std::min(hi[cut], iv->entry);
      }
    }
    // Spread the cuts that share one gap evenly across it.
    std::size_t cut = 1;
    while (cut < q) {
      std::size_t end = cut;
      while (end + 1 < q && lo[end + 1] == lo[cut] && hi[end + 1] == hi[cut]) ++end;
      if (!(lo[cut] < hi[cut]))
        throw ConfigError("no room for a layer boundary on node " + std::to_string(node) +
                          ": consecutive event regions touch");
      std::size_t m = end - cut + 1;
      for (std::size_t j = 0; j < m; ++j)
        b[cut + j][i] = lo[cut] + (hi[cut] - lo[cut]) * static_cast<double>(j + 1) / static_cast<double>(m + 1);
      cut = end + 1;
    }
  }
  return b;
}

Factorization from_layers(const EventStructuredNetwork& esn, const std::vector<std::size_t>& layer_of) {
  std::size_t q = 0;
  for (std::size_t l : layer_of) q = std::max(q, l + 1);
  Factorization f;
  f.layers.resize(q);
  for (std::size_t e = 0; e < layer_of.size(); ++e) f.layers[layer_of[e]].push_back(esn.events()[e].name);
  for (auto& layer : f.layers) std::sort(layer.begin(), layer.end());
  f.boundaries = layer_boundaries(esn, layer_of, q);
  return f;
}

}  // namespace

EventStructuredNetwork::EventStructuredNetwork(std::size_t node_count, std::vector<EventRegion> events)
    : k_(node_count), events_(std::move(events)) {
  if (k_ == 0) throw ConfigError("event-structured network needs at least one node");
  std::set<std::string> names;
  for (auto& e : events_) {
    if (e.name.empty()) throw ConfigError("event without a name");
    if (!names.insert(e.name).second) throw ConfigError("duplicate event '" + e.name + "'");
    if (e.intervals.empty()) throw ConfigError("event '" + e.name + "' has no nodes");
    std::sort(e.intervals.begin(), e.intervals.end(),
              [](const ProgressInterval& a, const ProgressInterval& b) { return a.node < b.node; });
    for (std::size_t j = 0; j < e.intervals.size(); ++j) {
      const auto& iv = e.intervals[j];
      if (iv.node < 1 || static_cast<std::size_t>(iv.node) > k_)
        throw ConfigError("event '" + e.name + "' names unknown node " + std::to_string(iv.node));
      if (j > 0 && e.intervals[j - 1].node == iv.node)
        throw ConfigError("event '" + e.name + "' lists node " + std::to_string(iv.node) + " twice");
      if (!(0.0 < iv.entry && iv.entry < iv.exit && iv.exit < 1.0))
        throw ConfigError("event '" + e.name + "': progress interval on node " + std::to_string(iv.node) +
                          " must satisfy 0 < entry < exit < 1");
    }
  }
  const std::size_t n = events_.size();
  direct_.assign(n, std::vector<bool>(n, false));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (const auto& ia : events_[a].intervals) {
        const ProgressInterval* ib = events_[b].on(ia.node);
        if (!ib) continue;
        if (ia.exit <= ib->entry) direct_[a][b] = true;
        else if (ib->exit <= ia.entry) direct_[b][a] = true;
        else
          throw ConfigError("events '" + events_[a].name + "' and '" + events_[b].name +
                            "' overlap on node " + std::to_string(ia.node));
      }
    }
  }
  auto cycle = find_cycle(direct_);
  if (!cycle.empty()) {
    std::vector<std::string> names_in_cycle;
    for (std::size_t e : cycle) names_in_cycle.push_back(events_[e].name);
    throw CyclicPrecedence(names_in_cycle);
  }
  order_ = direct_;
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t a = 0; a < n; ++a)
      if (order_[a][m])
        for (std::size_t b = 0; b < n; ++b)
          if (order_[m][b]) order_[a][b] = true;
}

std::size_t EventStructuredNetwork::index_of(const std::string& name) const {
  for (std::size_t e = 0; e < events_.size(); ++e)
    if (events_[e].name == name) return e;
  throw ConfigError("unknown event '" + name + "'");
}

Precedence build_precedence(const EventStructuredNetwork& esn) { return esn.order(); }

Factorization factorize_left(const EventStructuredNetwork& esn) {
  auto depth = depth_from_sources(esn.direct());
  std::vector<std::size_t> layer_of;
  for (std::size_t d : depth) layer_of.push_back(d - 1);
  return from_layers(esn, layer_of);
}

Factorization factorize_right(const EventStructuredNetwork& esn) {
  auto height = depth_from_sources(transpose(esn.direct()));
  std::size_t q = layer_count_minimal(esn);
  std::vector<std::size_t> layer_of;
  for (std::size_t h : height) layer_of.push_back(q - h);
  return from_layers(esn, layer_of);
}

std::size_t layer_count_minimal(const EventStructuredNetwork& esn) {
  auto depth = depth_from_sources(esn.direct());
  std::size_t q = 0;
  for (std::size_t d : depth) q = std::max(q, d);
  return q;
}

std::vector<std::string> validate_factorization(const EventStructuredNetwork& esn, const Factorization& f) {
  std::vector<std::string> problems;
  const auto& events = esn.events();
  std::map<std::string, std::size_t> layer_of;
  for (std::size_t l = 0; l < f.layers.size(); ++l) {
    if (f.layers[l].empty()) problems.push_back("layer " + std::to_string(l + 1) + " is empty");
    for (const auto& name : f.layers[l])
      if (!layer_of.emplace(name, l).second) problems.push_back("event '" + name + "' appears twice");
  }
  for (const auto& e : events)
    if (!layer_of.count(e.name)) problems.push_back("event '" + e.name + "' is missing");
  if (layer_of.size() != events.size()) problems.push_back("factorization names unknown events");
  if (!problems.empty()) return problems;

  for (std::size_t a = 0; a < events.size(); ++a) {
    for (std::size_t b = 0; b < events.size(); ++b) {
      if (a == b) continue;
      bool shares = false;
      bool before = false;
      for (const auto& ia : events[a].intervals) {
        const ProgressInterval* ib = events[b].on(ia.node);
        if (!ib) continue;
        shares = true;
        if (ia.exit <= ib->entry) before = true;
      }
      std::size_t la = layer_of[events[a].name], lb = layer_of[events[b].name];
      if (shares && la == lb)
        problems.push_back("events '" + events[a].name + "' and '" + events[b].name + "' share a node in one layer");
      if (before && !(la < lb))
        problems.push_back("event '" + events[a].name + "' must come before '" + events[b].name + "'");
    }
  }

  const std::size_t q = f.layers.size();
  if (f.boundaries.size() != q + 1) {
    problems.push_back("expected " + std::to_string(q + 1) + " boundaries");
    return problems;
  }
  for (std::size_t i = 0; i < esn.node_count(); ++i) {
    if (f.boundaries[0][i] != 0.0 || f.boundaries[q][i] != 1.0)
      problems.push_back("outer boundaries of node " + std::to_string(i + 1) + " must be 0 and 1");
    for (std::size_t b = 0; b < q; ++b)
      if (!(f.boundaries[b][i] < f.boundaries[b + 1][i]))
        problems.push_back("boundaries of node " + std::to_string(i + 1) + " are not increasing");
  }
  for (const auto& e : events) {
    std::size_t l = layer_of[e.name];
    for (const auto& iv : e.intervals) {
      std::size_t i = static_cast<std::size_t>(iv.node - 1);
      if (!(f.boundaries[l][i] <= iv.entry && iv.exit <= f.boundaries[l + 1][i]))
        problems.push_back("event '" + e.name + "' is not inside its layer on node " + std::to_string(iv.node));
    }
  }
  return problems;
}

std::string notation(const Factorization& f) {
  std::string out;
  for (std::size_t l = f.layers.size(); l-- > 0;) {
    if (!out.empty()) out += " ◇ ";
    const auto& layer = f.layers[l];
    std::string group;
    for (const auto& name : layer) {
      if (!group.empty()) group += " ⊔ ";
      group += "P^" + name;
    }
    out += layer.size() > 1 ? "(" + group + ")" : group;
  }
  return out;
}

std::vector<FunctionalNetwork> realize_layers(const EventStructuredNetwork& esn, const Factorization& f,
                                              const FragmentBuilder& fragment, const FreeBuilder& free_run) {
  auto problems = validate_factorization(esn, f);
  if (!problems.empty()) throw ConfigError("invalid factorization: " + problems.front());
  const int k = static_cast<int>(esn.node_count());
  std::vector<FunctionalNetwork> stages;
  for (std::size_t l = 0; l < f.layers.size(); ++l) {
    const auto& lo = f.boundaries[l];
    const auto& hi = f.boundaries[l + 1];
    std::vector<FunctionalNetwork> parts;
    std::vector<std::vector<int>> sigmas;
    for (const auto& name : f.layers[l]) {
      const EventRegion& event = esn.events()[esn.index_of(name)];
      std::vector<int> inside = event.nodes();
      std::vector<int> outside;
      for (int id = 1; id <= k; ++id)
        if (!event.on(id)) outside.push_back(id);
      std::vector<FunctionalNetwork> factors{fragment(event, lo, hi)};
      NodeEmbedding emb;
      emb.maps.push_back(inside);
      if (!outside.empty()) {
        factors.push_back(free_run(outside, lo, hi));
        emb.maps.push_back(outside);
      }
      parts.push_back(product(factors, emb));
      sigmas.push_back(inside);
    }
    stages.push_back(amalgamate(parts, sigmas));
  }
  return stages;
}

FunctionalNetwork realize(const EventStructuredNetwork& esn, const Factorization& f, const FragmentBuilder& fragment,
                          const FreeBuilder& free_run) {
  auto stages = realize_layers(esn, f, fragment, free_run);
  FunctionalNetwork out = stages.front();
  for (std::size_t l = 1; l < stages.size(); ++l) out = concatenate(out, stages[l]);
  return out;
}

bool check_primitive(const FunctionalNetwork& fragment, const EventRegion& event, const NetworkState& reference,
                     const std::vector<double>& start_times, const IntegratorConfig& cfg,
                     std::vector<std::string>* warnings) {
  const std::size_t k = fragment.node_count();
  auto note = [&](const std::string& msg) {
    if (warnings) warnings->push_back("event '" + event.name + "': " + msg);
  };

  // Weak connectivity of the interaction graph (edges from N0 ignored).
  std::vector<std::size_t> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (const auto& st : fragment.stages())
    for (const auto& b : st.net.blocks())
      for (const auto& alpha : b.structures)
        for (const Edge& e : alpha.edges)
          if (e.from != kConstrainingNode)
            parent[find(static_cast<std::size_t>(e.from - 1))] = find(static_cast<std::size_t>(e.to - 1));
  std::set<std::size_t> components;
  for (std::size_t i = 0; i < k; ++i) components.insert(find(i));
  if (components.size() > 1) {
    note("interaction graph splits into " + std::to_string(components.size()) + " parts (an amalgamation)");
    return false;
  }

  // Interaction episodes on a reference run.
  if (fragment.stage_count() != 1) {
    note("fragment is already a concatenation");
    return false;
  }
  TransitionOptions opts;
  opts.keep_trajectory = true;
  TransitionResult run = run_generalized(fragment, reference, start_times, cfg, opts);
  const AsyncNetwork& net = fragment.first().net;
  const auto& segments = run.trajectory->segments;
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> item(segments.size() * k, none);
  std::vector<std::size_t> uf;
  std::function<std::size_t(std::size_t)> root = [&](std::size_t x) { return uf[x] == x ? x : uf[x] = root(uf[x]); };
  auto make = [&](std::size_t s, std::size_t i) {
    std::size_t& slot = item[s * k + i];
    if (slot == none) {
      slot = uf.size();
      uf.push_back(slot);
    }
    return slot;
  };
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& choice = segments[s].selection.choice;
    for (std::size_t b = 0; b < choice.size(); ++b) {
      if (choice[b] == none) continue;
      const auto& alpha = net.blocks()[b].structures[choice[b]];
      for (const Edge& e : alpha.edges) {
        std::size_t to = make(s, static_cast<std::size_t>(e.to - 1));
        if (e.from != kConstrainingNode) uf[root(make(s, static_cast<std::size_t>(e.from - 1)))] = root(to);
      }
    }
    if (s > 0)
      for (std::size_t i = 0; i < k; ++i)
        if (item[s * k + i] != none && item[(s - 1) * k + i] != none)
          uf[root(item[(s - 1) * k + i])] = root(item[s * k + i]);
  }
  std::set<std::size_t> episodes;
  for (std::size_t x = 0; x < uf.size(); ++x) episodes.insert(root(x));
  if (episodes.size() > 1) {
    note(std::to_string(episodes.size()) + " separate interaction episodes (a concatenation)");
    return false;
  }
  return true;
}

}  // namespace asyncnet
