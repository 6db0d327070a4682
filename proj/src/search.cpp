#include "trainperf/search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trainperf/errors.hpp"

namespace trainperf {

namespace {

std::size_t draw_below(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

double unit_interval(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Removes the layers in `block` and connects every producer feeding the block
// to every consumer the block fed, using the mode of the consumer-side edge.
void remove_block(NetworkSpec& net, const std::vector<std::string>& block) {
  const std::set<std::string> inside(block.begin(), block.end());
  std::vector<std::string> producers;
  std::vector<Edge> exits;
  std::vector<Edge> kept;
  for (const auto& e : net.edges) {
    const bool from_in = inside.count(e.from) != 0;
    const bool to_in = inside.count(e.to) != 0;
    if (!from_in && to_in) {
      if (std::find(producers.begin(), producers.end(), e.from) == producers.end()) producers.push_back(e.from);
    } else if (from_in && !to_in) {
      exits.push_back(e);
    } else if (!from_in && !to_in) {
      kept.push_back(e);
    }
  }
  for (const auto& x : exits) {
    for (const auto& p : producers) {
      const bool present = std::any_of(kept.begin(), kept.end(), [&](const Edge& e) {
        return e.from == p && e.to == x.to;
      });
      if (!present) kept.push_back({p, x.to, x.mode});
    }
  }
  net.edges = std::move(kept);
  std::erase_if(net.layers, [&](const Layer& l) { return inside.count(layer_id(l)) != 0; });
}

}  // namespace

SearchSpace::SearchSpace(NetworkSpec base, std::vector<WidthKnob> width, std::vector<DepthKnob> depth)
    : base_(std::move(base)), width_(std::move(width)), depth_(std::move(depth)) {
  validate(base_);
  for (const auto& k : width_) {
    if (k.multipliers.empty()) throw SchemaError("width knob '" + k.name + "' has no choices");
    if (k.layers.empty()) throw SchemaError("width knob '" + k.name + "' lists no layers");
    for (double m : k.multipliers) {
      if (!(m > 0.0 && m <= 1.0)) throw SchemaError("width knob '" + k.name + "': multipliers must lie in (0, 1]");
    }
    for (const auto& id : k.layers) {
      const Layer* l = base_.find(id);
      if (l == nullptr || !std::holds_alternative<ConvLayerSpec>(*l)) {
        throw ValidationError("unknown endpoint", id, "width knob '" + k.name + "' needs a conv layer");
      }
    }
  }
  std::set<std::string> in_blocks;
  for (const auto& k : depth_) {
    if (k.keep.empty()) throw SchemaError("depth knob '" + k.name + "' has no choices");
    for (std::size_t c : k.keep) {
      if (c > k.blocks.size()) throw SchemaError("depth knob '" + k.name + "' keeps more blocks than it has");
    }
    for (const auto& block : k.blocks) {
      if (block.empty()) throw SchemaError("depth knob '" + k.name + "' has an empty block");
      for (const auto& id : block) {
        if (base_.find(id) == nullptr) throw ValidationError("unknown endpoint", id, "depth knob '" + k.name + "'");
        if (!in_blocks.insert(id).second) {
          throw SchemaError("layer '" + id + "' belongs to more than one removable block");
        }
      }
    }
  }
  // Each choice in isolation, then everything at its smallest and largest.
  Encoding lo(knob_count(), 0);
  for (std::size_t k = 0; k < knob_count(); ++k) {
    for (std::size_t c = 0; c < choice_count(k); ++c) {
      Encoding e = lo;
      e[k] = c;
      (void)decode(e);
    }
  }
  Encoding hi(knob_count());
  for (std::size_t k = 0; k < knob_count(); ++k) hi[k] = choice_count(k) - 1;
  (void)decode(hi);
}

std::size_t SearchSpace::choice_count(std::size_t knob) const {
  if (knob < width_.size()) return width_[knob].multipliers.size();
  return depth_.at(knob - width_.size()).keep.size();
}

std::size_t SearchSpace::size() const {
  std::size_t total = 1;
  for (std::size_t k = 0; k < knob_count(); ++k) {
    if (__builtin_mul_overflow(total, choice_count(k), &total)) return std::numeric_limits<std::size_t>::max();
  }
  return total;
}

void SearchSpace::check(const Encoding& e) const {
  if (e.size() != knob_count()) throw SchemaError("encoding has the wrong number of knobs");
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (e[k] >= choice_count(k)) throw SchemaError("encoding choice out of range");
  }
}

NetworkSpec SearchSpace::decode(const Encoding& e) const {
  check(e);
  NetworkSpec net = base_;
  for (std::size_t d = 0; d < depth_.size(); ++d) {
    const auto& knob = depth_[d];
    for (std::size_t b = knob.keep[e[width_.size() + d]]; b < knob.blocks.size(); ++b) remove_block(net, knob.blocks[b]);
  }
  std::map<std::string, double> levels;
  for (std::size_t w = 0; w < width_.size(); ++w) {
    const double level = 100.0 * (1.0 - width_[w].multipliers[e[w]]);
    if (level <= 0.0) continue;
    for (const auto& id : width_[w].layers) {
      if (net.find(id) != nullptr) levels[id] = level;
    }
  }
  if (levels.empty()) {
    validate(net);
    return net;
  }
  return prune_network_per_layer(net, levels);
}

Encoding SearchSpace::random_encoding(std::mt19937_64& rng) const {
  Encoding e(knob_count());
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = draw_below(rng, choice_count(k));
  return e;
}

Encoding SearchSpace::encoding_at(std::size_t index) const {
  Encoding e(knob_count());
  for (std::size_t k = e.size(); k-- > 0;) {
    e[k] = index % choice_count(k);
    index /= choice_count(k);
  }
  return e;
}

SearchSpace parse_search_space(std::string_view json_text, const std::filesystem::path& base_dir) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("search space is not valid JSON: ") + e.what());
  }
  try {
    NetworkSpec base;
    const auto& b = doc.at("base");
    if (b.is_string()) {
      base = load_network(base_dir / b.get<std::string>());
    } else {
      base = parse_network(b.dump());
    }
    std::vector<WidthKnob> width;
    for (const auto& k : doc.value("width_knobs", json::array())) {
      width.push_back({k.at("name").get<std::string>(), k.at("layers").get<std::vector<std::string>>(),
                       k.at("multipliers").get<std::vector<double>>()});
    }
    std::vector<DepthKnob> depth;
    for (const auto& k : doc.value("depth_knobs", json::array())) {
      depth.push_back({k.at("name").get<std::string>(), k.at("blocks").get<std::vector<std::vector<std::string>>>(),
                       k.at("keep").get<std::vector<std::size_t>>()});
    }
    return SearchSpace(std::move(base), std::move(width), std::move(depth));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed search space: ") + e.what());
  }
}

SearchSpace load_search_space(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open search space " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_search_space(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------

void Constraints::validate() const {
  for (const auto& bound : {max_gamma_mb, max_small_gamma_mb, max_small_phi_ms}) {
    if (bound && !(std::isfinite(*bound) && *bound > 0.0)) throw SchemaError("constraint bounds must be > 0");
  }
  if (train_bs < 1) throw SchemaError("training batch size must be >= 1");
}

std::vector<Attribute> Constraints::required_attributes() const {
  std::vector<Attribute> out;
  if (max_gamma_mb) out.push_back(Attribute::Gamma);
  if (max_small_gamma_mb) out.push_back(Attribute::SmallGamma);
  if (max_small_phi_ms) out.push_back(Attribute::SmallPhi);
  return out;
}

double parameter_count(const NetworkSpec& net) {
  double total = 0.0;
  for (const auto& l : net.layers) {
    if (const auto* c = std::get_if<ConvLayerSpec>(&l)) {
      total += static_cast<double>(c->n) * static_cast<double>(c->m / c->g) * static_cast<double>(c->k * c->k);
    }
  }
  return total;
}

Fitness parameter_count_fitness() {
  return [](const Candidate& c) { return parameter_count(c.net); };
}

FeasibilityOracle::FeasibilityOracle(const SearchSpace& space, Constraints constraints, Predictor predictor)
    : space_(space), constraints_(std::move(constraints)), predictor_(std::move(predictor)) {
  constraints_.validate();
  if (!constraints_.required_attributes().empty() && !predictor_) {
    throw EvalError("constraints are set but no predictor was given");
  }
}

bool FeasibilityOracle::check(const Encoding& e, Candidate& candidate) {
  ++checks_;
  candidate.encoding = e;
  auto it = cache_.find(e);
  if (it == cache_.end()) {
    candidate.net = space_.decode(e);
    std::map<Attribute, double> preds;
    for (Attribute a : constraints_.required_attributes()) {
      preds[a] = predictor_(a, candidate.net, a == Attribute::Gamma ? constraints_.train_bs : 1);
    }
    it = cache_.emplace(e, std::move(preds)).first;
  } else {
    candidate.net = {};
  }
  candidate.predictions = it->second;
  const auto& p = it->second;
  if (constraints_.max_gamma_mb && !(p.at(Attribute::Gamma) <= *constraints_.max_gamma_mb)) return false;
  if (constraints_.max_small_gamma_mb && !(p.at(Attribute::SmallGamma) <= *constraints_.max_small_gamma_mb)) {
    return false;
  }
  if (constraints_.max_small_phi_ms && !(p.at(Attribute::SmallPhi) <= *constraints_.max_small_phi_ms)) return false;
  return true;
}

SampleResult sample_feasible(const SearchSpace& space, FeasibilityOracle& oracle, std::mt19937_64& rng,
                             std::uint64_t budget) {
  SampleResult result;
  while (true) {
    if (oracle.check(space.random_encoding(rng), result.candidate)) break;
    if (++result.rejections >= budget) {
      throw InfeasibleError("no feasible candidate after " + std::to_string(budget) + " samples");
    }
  }
  if (result.candidate.net.layers.empty()) result.candidate.net = space.decode(result.candidate.encoding);
  return result;
}

void EsConfig::validate() const {
  if (population < 1) throw SchemaError("population must be >= 1");
  if (iterations < 1) throw SchemaError("iterations must be >= 1");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw SchemaError("mutation_rate must lie in [0, 1]");
  if (!(mutation_ratio >= 0.0 && mutation_ratio <= 1.0)) throw SchemaError("mutation_ratio must lie in [0, 1]");
  if (!(parent_fraction > 0.0 && parent_fraction <= 1.0)) throw SchemaError("parent_fraction must lie in (0, 1]");
  if (rejection_budget < 1) throw SchemaError("rejection budget must be >= 1");
}

namespace {

struct Member {
  Encoding encoding;
  double fitness;
};

bool better(const Member& a, const Member& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return a.encoding < b.encoding;
}

class Scorer {
 public:
  Scorer(const SearchSpace& space, const Fitness& fitness) : space_(space), fitness_(fitness) {}

  double operator()(Candidate& c) {
    auto it = cache_.find(c.encoding);
    if (it != cache_.end()) return it->second;
    if (c.net.layers.empty()) c.net = space_.decode(c.encoding);
    c.fitness = fitness_(c);
    if (!std::isfinite(c.fitness)) throw EvalError("fitness returned a non-finite value");
    return cache_.emplace(c.encoding, c.fitness).first->second;
  }

 private:
  const SearchSpace& space_;
  const Fitness& fitness_;
  std::map<Encoding, double> cache_;
};

}  // namespace

SearchResult evolve(const SearchSpace& space, const Constraints& constraints, const Predictor& predictor,
                    const Fitness& fitness, const EsConfig& config) {
  config.validate();
  if (!fitness) throw EvalError("no fitness function");
  FeasibilityOracle oracle(space, constraints, predictor);
  Scorer score(space, fitness);
  std::mt19937_64 rng(config.seed);

  std::vector<Member> population;
  population.reserve(config.population);
  for (std::size_t i = 0; i < config.population; ++i) {
    auto s = sample_feasible(space, oracle, rng, config.rejection_budget);
    population.push_back({s.candidate.encoding, score(s.candidate)});
  }
  std::sort(population.begin(), population.end(), better);

  SearchResult result;
  auto log_iteration = [&](std::size_t iter) {
    result.log.push_back({iter, population.front().fitness, oracle.checks(), population.front().encoding});
  };
  log_iteration(0);

  const auto n_parents = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(config.parent_fraction * static_cast<double>(config.population))));
  const auto n_mutants =
      static_cast<std::size_t>(std::llround(config.mutation_ratio * static_cast<double>(config.population)));
  const std::size_t knobs = space.knob_count();

  Candidate scratch;
  for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
    std::vector<Member> next(population.begin(), population.begin() + std::min(n_parents, population.size()));
    const std::size_t parents = next.size();
    for (std::size_t c = 0; c < config.population; ++c) {
      std::uint64_t rejections = 0;
      Encoding child;
      while (true) {
        if (c < n_mutants) {
          child = next[draw_below(rng, parents)].encoding;
          for (std::size_t k = 0; k < knobs; ++k) {
            if (unit_interval(rng) < config.mutation_rate) child[k] = draw_below(rng, space.choice_count(k));
          }
        } else {
          const Encoding& a = next[draw_below(rng, parents)].encoding;
          const Encoding& b = next[draw_below(rng, parents)].encoding;
          child.resize(knobs);
          for (std::size_t k = 0; k < knobs; ++k) child[k] = (rng() >> 63) != 0 ? a[k] : b[k];
        }
        if (oracle.check(child, scratch)) break;
        if (++rejections >= config.rejection_budget) {
          throw InfeasibleError("no feasible child after " + std::to_string(rejections) + " samples");
        }
      }
      next.push_back({child, score(scratch)});
    }
    std::sort(next.begin(), next.end(), better);
    next.resize(std::min(next.size(), config.population));
    if (next.front().fitness > population.front().fitness) ++result.improvements;
    population = std::move(next);
    log_iteration(iter);
  }

  result.evaluated_total = oracle.checks();
  Candidate& best = result.best;
  oracle.check(population.front().encoding, best);
  best.net = space.decode(best.encoding);
  best.fitness = population.front().fitness;
  return result;
}

std::optional<Candidate> exhaustive_search(const SearchSpace& space, const Constraints& constraints,
                                           const Predictor& predictor, const Fitness& fitness) {
  FeasibilityOracle oracle(space, constraints, predictor);
  std::optional<Member> best;
  const std::size_t total = space.size();
  Candidate c;
  for (std::size_t i = 0; i < total; ++i) {
    if (!oracle.check(space.encoding_at(i), c)) continue;
    if (c.net.layers.empty()) c.net = space.decode(c.encoding);
    Member m{c.encoding, fitness(c)};
    if (!best || better(m, *best)) best = m;
  }
  if (!best) return std::nullopt;
  Candidate out;
  oracle.check(best->encoding, out);
  out.net = space.decode(out.encoding);
  out.fitness = best->fitness;
  return out;
}

void write_search_log(std::ostream& out, const std::vector<SearchLogEntry>& log) {
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["iter"] = e.iter;
    j["best_fitness"] = e.best_fitness;
    j["evaluated_total"] = e.evaluated_total;
    j["best_encoding"] = e.best_encoding;
    out << j.dump() << '\n';
  }
}

std::uint64_t nominal_candidates(const EsConfig& config) {
  return static_cast<std::uint64_t>(config.population) * static_cast<std::uint64_t>(config.iterations);
}

double estimate_search_cost(std::uint64_t candidates, double per_candidate_s) {
  if (!(per_candidate_s >= 0.0) || !std::isfinite(per_candidate_s)) {
    throw SchemaError("per-candidate cost must be finite and >= 0");
  }
  return static_cast<double>(candidates) * per_candidate_s;
}

double estimate_search_cost(const EsConfig& config, double per_candidate_s) {
  return estimate_search_cost(nominal_candidates(config), per_candidate_s);
}

}  // namespace trainperf
