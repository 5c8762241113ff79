#include "asyncnet/rendezvous.hpp"

#include <algorithm>
#include <random>

#include "asyncnet/error.hpp"

namespace asyncnet {

namespace {

Expression coord(const PhaseSpace& space, int id) {
  return Expression::variable(space.component_at(space.offset(id)).name);
}

Expression level(const PhaseSpace& space, int id, double threshold) {
  Expression p = coord(space, id);
  if (threshold == 0.0) return p;
  return Expression::binary(Op::Sub, p, Expression::literal(threshold));
}

// Block of node `id` (numbered in `space`) taking part in `events`; `ids`
// translates model node ids into `space` ids.
Block node_block(const RendezvousModel& model, const PhaseSpace& space, int model_id,
                 const std::vector<const EventRegion*>& events, const std::function<int(int)>& ids) {
  const int id = ids(model_id);
  const std::string& node = space.node(id).name;
  const std::string& p = space.component_at(space.offset(id)).name;
  Block b;
  b.nodes = {id};
  std::string run = "run_" + node;
  b.structures.push_back(ConnectionStructure{run, {}});
  b.fields.push_back(AdmissibleField{run, {{p, Expression::literal(model.speeds.at(static_cast<std::size_t>(model_id - 1)))}}});
  for (const EventRegion* e : events) {
    if (e->intervals.size() < 2) continue;
    std::string wait = "wait_" + node + "_" + e->name;
    ConnectionStructure alpha{wait, {Edge{kConstrainingNode, id}}};
    Expression missing;
    bool first = true;
    for (const auto& iv : e->intervals) {
      if (iv.node == model_id) continue;
      alpha.edges.insert(Edge{ids(iv.node), id});
      Expression absent = Expression::binary(Op::Less, coord(space, ids(iv.node)), Expression::literal(iv.entry));
      missing = first ? absent : Expression::binary(Op::Or, missing, absent);
      first = false;
    }
    const ProgressInterval* own = e->on(model_id);
    Expression here = Expression::binary(
        Op::And, Expression::binary(Op::GreaterEq, coord(space, id), Expression::literal(own->entry)),
        Expression::binary(Op::Less, coord(space, id), Expression::literal(own->exit)));
    b.structures.push_back(alpha);
    b.fields.push_back(AdmissibleField{wait, {{p, Expression::literal(0.0)}}});
    b.events.guards.push_back(Guard{Expression::binary(Op::And, here, missing), wait});
  }
  b.events.default_structure = run;
  return b;
}

std::vector<const EventRegion*> events_on(const EventStructuredNetwork& esn, int node) {
  std::vector<const EventRegion*> out;
  for (const auto& e : esn.events())
    if (e.on(node)) out.push_back(&e);
  return out;
}

PhaseSpace restrict_space(const PhaseSpace& space, const std::vector<int>& nodes) {
  std::vector<NodeSpec> specs;
  for (int id : nodes) specs.push_back(space.node(id));
  return PhaseSpace(std::move(specs));
}

void check_model(const RendezvousModel& model, const EventStructuredNetwork& esn) {
  if (model.space.node_count() != esn.node_count())
    throw ConfigError("rendezvous model and event regions disagree on the node count");
  for (const auto& n : model.space.nodes()) {
    if (n.components.size() != 1 || n.components[0].is_circle() || n.components[0].lo != 0.0 ||
        n.components[0].hi != 1.0)
      throw ConfigError("rendezvous node '" + n.name + "' needs a single progress coordinate in [0, 1]");
  }
  if (model.speeds.size() != esn.node_count()) throw ConfigError("rendezvous model needs one speed per node");
  for (double v : model.speeds)
    if (!(v > 0.0)) throw ConfigError("rendezvous speeds must be positive");
}

}  // namespace

RendezvousModel RendezvousModel::standard(std::size_t k, std::vector<double> speeds) {
  std::vector<NodeSpec> nodes;
  for (std::size_t i = 1; i <= k; ++i)
    nodes.push_back(NodeSpec{"N" + std::to_string(i), {PhaseComponent::interval("p" + std::to_string(i), 0.0, 1.0)}});
  if (speeds.empty()) speeds.assign(k, 1.0);
  return RendezvousModel{PhaseSpace(std::move(nodes)), std::move(speeds)};
}

FunctionalNetwork rendezvous_monolithic(const RendezvousModel& model, const EventStructuredNetwork& esn) {
  check_model(model, esn);
  const int k = static_cast<int>(esn.node_count());
  std::vector<Block> blocks;
  std::vector<Expression> init, term;
  auto same = [](int id) { return id; };
  for (int id = 1; id <= k; ++id) {
    blocks.push_back(node_block(model, model.space, id, events_on(esn, id), same));
    init.push_back(level(model.space, id, 0.0));
    term.push_back(level(model.space, id, 1.0));
  }
  return FunctionalNetwork(AsyncNetwork(model.space, {}, std::move(blocks)), std::move(init), std::move(term));
}

FragmentBuilder rendezvous_fragments(const RendezvousModel& model, const EventStructuredNetwork& esn) {
  check_model(model, esn);
  return [model](const EventRegion& event, const std::vector<double>& lo, const std::vector<double>& hi) {
    std::vector<int> nodes = event.nodes();
    PhaseSpace space = restrict_space(model.space, nodes);
    auto ids = [&](int model_id) {
      for (std::size_t j = 0; j < nodes.size(); ++j)
        if (nodes[j] == model_id) return static_cast<int>(j + 1);
      throw ConfigError("event refers to a node outside its fragment");
    };
    std::vector<Block> blocks;
    std::vector<Expression> init, term;
    for (int id : nodes) {
      blocks.push_back(node_block(model, space, id, {&event}, ids));
      init.push_back(level(space, ids(id), lo[static_cast<std::size_t>(id - 1)]));
      term.push_back(level(space, ids(id), hi[static_cast<std::size_t>(id - 1)]));
    }
    return FunctionalNetwork(AsyncNetwork(space, {}, std::move(blocks)), std::move(init), std::move(term));
  };
}

FreeBuilder rendezvous_free_run(const RendezvousModel& model) {
  return [model](const std::vector<int>& nodes, const std::vector<double>& lo, const std::vector<double>& hi) {
    PhaseSpace space = restrict_space(model.space, nodes);
    std::vector<Block> blocks;
    std::vector<Expression> init, term;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      int local = static_cast<int>(j + 1);
      blocks.push_back(node_block(model, space, nodes[j], {}, [&](int) { return local; }));
      init.push_back(level(space, local, lo[static_cast<std::size_t>(nodes[j] - 1)]));
      term.push_back(level(space, local, hi[static_cast<std::size_t>(nodes[j] - 1)]));
    }
    return FunctionalNetwork(AsyncNetwork(space, {}, std::move(blocks)), std::move(init), std::move(term));
  };
}

NetworkState rendezvous_origin(const RendezvousModel& model) {
  return make_state(model.space, std::vector<double>(model.space.dimension(), 0.0));
}

std::vector<CompositionSample> rendezvous_samples(const RendezvousModel& model, std::size_t n, std::uint64_t seed,
                                                  double max_delay) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> delay(0.0, max_delay);
  std::vector<CompositionSample> out;
  for (std::size_t s = 0; s < n; ++s) {
    CompositionSample sample{rendezvous_origin(model), {}};
    for (std::size_t i = 0; i < model.space.node_count(); ++i) sample.start_times.push_back(delay(rng));
    out.push_back(std::move(sample));
  }
  return out;
}

double RendezvousVerification::max_state_error() const {
  double m = 0.0;
  for (const auto& [name, r] : checks) m = std::max(m, r.max_state_error);
  return m;
}

double RendezvousVerification::max_time_error() const {
  double m = 0.0;
  for (const auto& [name, r] : checks) m = std::max(m, r.max_time_error);
  return m;
}

bool RendezvousVerification::within(double tol) const {
  return std::all_of(checks.begin(), checks.end(), [&](const auto& c) { return c.second.within(tol); });
}

RendezvousVerification verify_rendezvous(const RendezvousModel& model, const EventStructuredNetwork& esn,
                                         const std::vector<CompositionSample>& samples, const IntegratorConfig& cfg,
                                         unsigned threads) {
  RendezvousVerification out;
  out.layers = layer_count_minimal(esn);
  FunctionalNetwork mono = rendezvous_monolithic(model, esn);
  auto fragments = rendezvous_fragments(model, esn);
  auto free_run = rendezvous_free_run(model);
  std::vector<FunctionalNetwork> realized;
  for (const auto& [side, f] : {std::pair{"left", factorize_left(esn)}, std::pair{"right", factorize_right(esn)}}) {
    auto layers = realize_layers(esn, f, fragments, free_run);
    FunctionalNetwork whole = layers.front();
    for (std::size_t l = 1; l < layers.size(); ++l) whole = concatenate(whole, layers[l]);
    out.checks.emplace_back(std::string(side) + "_vs_monolithic", compare_with_chain(whole, {mono}, samples, cfg, threads));
    if (layers.size() > 1) {
      FunctionalNetwork rest = layers[1];
      for (std::size_t l = 2; l < layers.size(); ++l) rest = concatenate(rest, layers[l]);
      out.checks.emplace_back(std::string(side) + "_composition",
                              verify_composition(layers.front(), rest, samples, cfg, threads));
    }
    realized.push_back(std::move(whole));
  }
  out.checks.emplace_back("left_vs_right", compare_with_chain(realized[0], {realized[1]}, samples, cfg, threads));
  return out;
}

}  // namespace asyncnet
