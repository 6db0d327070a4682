#include "trainperf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "trainperf/errors.hpp"

namespace trainperf {

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::Gamma: return "gamma";
    case Attribute::Phi: return "phi";
    case Attribute::SmallGamma: return "small_gamma";
    case Attribute::SmallPhi: return "small_phi";
  }
  return "gamma";
}

std::string_view column_name(Attribute a) {
  switch (a) {
    case Attribute::Gamma: return "gamma_mb";
    case Attribute::Phi: return "phi_ms";
    case Attribute::SmallGamma: return "small_gamma_mb";
    case Attribute::SmallPhi: return "small_phi_ms";
  }
  return "gamma_mb";
}

Attribute attribute_from_string(std::string_view text) {
  for (Attribute a : kAllAttributes) {
    if (text == to_string(a) || text == column_name(a)) return a;
  }
  if (text == "Γ" || text == "G") return Attribute::Gamma;
  if (text == "Φ" || text == "P") return Attribute::Phi;
  if (text == "γ" || text == "g") return Attribute::SmallGamma;
  if (text == "φ" || text == "p") return Attribute::SmallPhi;
  throw JoinError("unknown attribute '" + std::string(text) + "'");
}

FeatureMode feature_mode_for(Attribute a) {
  return a == Attribute::Gamma || a == Attribute::Phi ? FeatureMode::Training : FeatureMode::InferenceOnly;
}

std::optional<double> ProfileRecord::target(Attribute a) const {
  switch (a) {
    case Attribute::Gamma: return gamma_mb;
    case Attribute::Phi: return phi_ms;
    case Attribute::SmallGamma: return small_gamma_mb;
    case Attribute::SmallPhi: return small_phi_ms;
  }
  return std::nullopt;
}

RecordKey key_of(const ProfileRecord& r) { return {r.network, r.pruning_level, r.strategy, r.seed, r.bs}; }

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// RFC 4180 fields on a single line.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      if (!field.empty() || was_quoted) throw CsvError(row, "stray quote");
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw CsvError(row, "text after closing quote");
      field.push_back(c);
    }
  }
  if (quoted) throw CsvError(row, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

template <typename Int>
Int parse_int(const std::string& text, std::size_t row, const char* column) {
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw CsvError(row, std::string("column '") + column + "' is not an integer: '" + text + "'");
  }
  return value;
}

double parse_measurement(const std::string& text, std::size_t row, const char* column) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw CsvError(row, std::string("column '") + column + "' is not a decimal number: '" + text + "'");
  }
  if (!std::isfinite(value) || value < 0.0) {
    throw CsvError(row, std::string("column '") + column + "' must be finite and >= 0");
  }
  return value;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void check_level(int level, std::size_t row) {
  if (level < 0 || level >= 100) throw CsvError(row, "pruning_level must lie in [0, 100)");
}

}  // namespace

std::vector<ProfileRecord> read_dataset(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw CsvError(1, "missing header");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kDatasetHeader) throw CsvError(1, "header must be '" + std::string(kDatasetHeader) + "'");

  std::vector<ProfileRecord> records;
  std::size_t row = 1;
  while (next_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv_line(line, row);
    if (f.size() != 9) throw CsvError(row, "expected 9 fields, found " + std::to_string(f.size()));
    ProfileRecord r;
    r.network = f[0];
    if (r.network.empty()) throw CsvError(row, "network is empty");
    r.pruning_level = parse_int<int>(f[1], row, "pruning_level");
    check_level(r.pruning_level, row);
    r.strategy = f[2];
    r.seed = parse_int<std::uint64_t>(f[3], row, "seed");
    r.bs = parse_int<std::int64_t>(f[4], row, "bs");
    if (r.bs < 1) throw CsvError(row, "bs must be >= 1");
    r.gamma_mb = parse_measurement(f[5], row, "gamma_mb");
    r.phi_ms = parse_measurement(f[6], row, "phi_ms");
    if (f[7].empty() != f[8].empty()) {
      throw CsvError(row, "small_gamma_mb and small_phi_ms must be both present or both absent");
    }
    if (!f[7].empty()) {
      r.small_gamma_mb = parse_measurement(f[7], row, "small_gamma_mb");
      r.small_phi_ms = parse_measurement(f[8], row, "small_phi_ms");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ProfileRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<ProfileRecord>& records) {
  out << kDatasetHeader << '\n';
  for (const auto& r : records) {
    out << quote_if_needed(r.network) << ',' << r.pruning_level << ',' << quote_if_needed(r.strategy) << ','
        << r.seed << ',' << r.bs << ',' << format_number(r.gamma_mb) << ',' << format_number(r.phi_ms) << ','
        << (r.small_gamma_mb ? format_number(*r.small_gamma_mb) : "") << ','
        << (r.small_phi_ms ? format_number(*r.small_phi_ms) : "") << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const std::vector<ProfileRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset " + path.string());
  write_dataset(out, records);
}

// ---------------------------------------------------------------------------

void ProfilingPlan::append(PlanEntry entry) {
  const auto key = entry.key();
  for (const auto& e : entries) {
    if (e.key() == key) {
      throw PlanError("duplicate plan entry (" + entry.network + ", " + std::to_string(entry.pruning_level) +
                      ", " + entry.strategy + ", " + std::to_string(entry.seed) + ", " +
                      std::to_string(entry.bs) + ")");
    }
  }
  entries.push_back(std::move(entry));
}

std::vector<std::int64_t> default_batch_sizes() {
  return {2, 4, 8, 16, 32, 64, 70, 80, 90, 100, 110, 120, 128, 140, 150, 160, 170, 180, 190, 200, 210, 220, 230, 240, 256};
}

std::vector<int> train_levels() { return {0, 30, 50, 70, 90}; }

std::vector<int> test_levels() {
  const auto train = train_levels();
  std::vector<int> out;
  for (int x = 0; x <= 18; ++x) {
    if (std::find(train.begin(), train.end(), 5 * x) == train.end()) out.push_back(5 * x);
  }
  return out;
}

namespace {

template <typename T>
std::vector<T> unique_in_order(const std::vector<T>& values) {
  std::vector<T> out;
  for (const auto& v : values)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

}  // namespace

ProfilingPlan generate_plan(const std::vector<NetworkSpec>& nets, const std::vector<int>& levels,
                            const std::vector<std::string>& strategies, const std::vector<std::uint64_t>& seeds,
                            const std::vector<std::int64_t>& batch_sizes) {
  if (batch_sizes.empty()) throw PlanError("batch-size list is empty");
  for (int l : levels)
    if (l < 0 || l >= 100) throw PlanError("pruning level " + std::to_string(l) + " outside [0, 100)");
  for (auto bs : batch_sizes)
    if (bs < 1) throw PlanError("batch size must be >= 1");
  for (const auto& s : strategies)
    if (!is_known_strategy(s)) throw PlanError("unknown pruning strategy '" + s + "'");

  ProfilingPlan plan;
  plan.batch_sizes = unique_in_order(batch_sizes);
  std::vector<std::string> names;
  for (const auto& n : nets) names.push_back(n.name);
  for (const auto& name : unique_in_order(names)) {
    for (int level : unique_in_order(levels)) {
      for (const auto& strategy : unique_in_order(strategies)) {
        for (auto seed : unique_in_order(seeds)) {
          for (auto bs : plan.batch_sizes) plan.entries.push_back({name, level, strategy, seed, bs});
        }
      }
    }
  }
  return plan;
}

void write_plan(std::ostream& out, const ProfilingPlan& plan) {
  out << kPlanHeader << '\n';
  for (const auto& e : plan.entries) {
    out << quote_if_needed(e.network) << ',' << e.pruning_level << ',' << quote_if_needed(e.strategy) << ','
        << e.seed << ',' << e.bs << '\n';
  }
}

ProfilingPlan read_plan(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw CsvError(1, "missing header");
  if (line != kPlanHeader) throw CsvError(1, "header must be '" + std::string(kPlanHeader) + "'");
  ProfilingPlan plan;
  std::size_t row = 1;
  while (next_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv_line(line, row);
    if (f.size() != 5) throw CsvError(row, "expected 5 fields, found " + std::to_string(f.size()));
    PlanEntry e{f[0], parse_int<int>(f[1], row, "pruning_level"), f[2], parse_int<std::uint64_t>(f[3], row, "seed"),
                parse_int<std::int64_t>(f[4], row, "bs")};
    check_level(e.pruning_level, row);
    plan.append(std::move(e));
  }
  return plan;
}

// ---------------------------------------------------------------------------

NetworkCatalog make_catalog(const std::vector<NetworkSpec>& nets) {
  NetworkCatalog catalog;
  for (const auto& n : nets) {
    if (!catalog.emplace(n.name, n).second) throw JoinError("two networks share the name '" + n.name + "'");
  }
  return catalog;
}

NetworkSpec reconstruct_variant(const NetworkCatalog& networks, const std::string& network, int level,
                                const std::string& strategy, std::uint64_t seed) {
  auto it = networks.find(network);
  if (it == networks.end()) throw JoinError("record references unknown network '" + network + "'");
  if (!is_known_strategy(strategy)) throw JoinError("record references unknown strategy '" + strategy + "'");
  return prune_network(it->second, make_prune_config(it->second, strategy, level, seed));
}

DesignMatrix join(const std::vector<ProfileRecord>& records, const NetworkCatalog& networks, Attribute target,
                  FeatureLayout layout) {
  DesignMatrix out;
  out.feature_names = layout.names();
  out.feature_schema = layout.schema_tag();
  if (!records.empty() &&
      std::none_of(records.begin(), records.end(), [&](const auto& r) { return r.target(target).has_value(); })) {
    throw JoinError("dataset has no values in column '" + std::string(column_name(target)) + "'");
  }

  using VariantKey = std::tuple<std::string, int, std::string, std::uint64_t>;
  std::map<VariantKey, NetworkSpec> variants;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto value = r.target(target);
    if (!value) continue;
    VariantKey vk{r.network, r.pruning_level, r.strategy, r.seed};
    auto it = variants.find(vk);
    if (it == variants.end()) {
      it = variants.emplace(vk, reconstruct_variant(networks, r.network, r.pruning_level, r.strategy, r.seed)).first;
    }
    out.rows.push_back(extract_features(it->second, r.bs, layout).values());
    out.targets.push_back(*value);
    out.record_index.push_back(i);
  }
  return out;
}

}  // namespace trainperf
