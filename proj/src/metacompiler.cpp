#include "pwe/metacompiler.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "pwe/emwave.hpp"
#include "pwe/errors.hpp"
#include "pwe/rng.hpp"

namespace pwe {

bool operator==(const SwitchConfig& a, const SwitchConfig& b) {
  return a.rows == b.rows && a.cols == b.cols && a.on == b.on;
}

double array_factor(const SwitchConfig& config, const ArrayModel& model, const Vec3& direction) {
  const double k = 2.0 * kPi / wavelength_m(model.frequency_hz);
  std::complex<double> sum{0.0, 0.0};
  for (int r = 0; r < model.rows; ++r) {
    for (int c = 0; c < model.cols; ++c) {
      const double geo = k * dot(model.element_position(r, c), direction);
      // ON -> phase 0, OFF -> phase pi: the element contributes +/- e^{j geo}
      const std::complex<double> e = std::polar(1.0, geo);
      sum += config.get(r, c) ? e : -e;
    }
  }
  return std::norm(sum);
}

namespace {

// 5 degree hemisphere grid over the array's front half-space.
std::vector<Vec3> absorb_direction_grid() {
  std::vector<Vec3> dirs;
  dirs.push_back({0, 0, 1});
  for (int el = 0; el < 90; el += 5) {
    for (int az = 0; az < 360; az += 5) {
      const double e = deg2rad(el), a = deg2rad(az);
      dirs.push_back({std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e)});
    }
  }
  return dirs;
}

struct SynthObjective {
  // higher is better for every action kind
  double operator()(const SwitchConfig& cfg) const {
    if (maximize_toward) return array_factor(cfg, *model, target_dir);
    double worst = 0.0;
    for (const Vec3& d : *grid) worst = std::max(worst, array_factor(cfg, *model, d));
    return -worst;
  }

  const ArrayModel* model = nullptr;
  bool maximize_toward = true;
  Vec3 target_dir;
  const std::vector<Vec3>* grid = nullptr;
};

SwitchConfig config_from_bits(const ArrayModel& model, uint64_t bits) {
  SwitchConfig cfg;
  cfg.rows = model.rows;
  cfg.cols = model.cols;
  cfg.on.resize(static_cast<size_t>(model.element_count()));
  for (int i = 0; i < model.element_count(); ++i) cfg.on[i] = (bits >> i) & 1u;
  return cfg;
}

}  // namespace

SynthesisResult synthesize(const TileFunction& target, const ArrayModel& model,
                           long budget, uint64_t seed) {
  if (budget < 1) throw ValidationError("synthesize: budget must be >= 1");
  if (model.rows < 1 || model.cols < 1 || !(model.spacing_m > 0.0))
    throw ValidationError("synthesize: invalid array model");

  SynthObjective objective;
  objective.model = &model;
  std::vector<Vec3> grid;
  switch (target.action) {
    case Action::Steer:
      objective.target_dir = target.outgoing_dir.normalized();
      break;
    case Action::Focus:
      objective.target_dir = target.focal_point.normalized();
      break;
    case Action::Absorb:
      objective.maximize_toward = false;
      grid = absorb_direction_grid();
      objective.grid = &grid;
      break;
    case Action::Reset:
      throw ValidationError("synthesize: RESET is not a synthesizable target");
  }

  SynthesisResult best;
  best.score = -1e300;

  const int nbits = model.element_count();
  if (nbits <= 62 && (1LL << nbits) <= budget) {
    // space fits in the budget: enumerate, optimum guaranteed
    for (uint64_t bits = 0; bits < (1ULL << nbits); ++bits) {
      SwitchConfig cfg = config_from_bits(model, bits);
      const double score = objective(cfg);
      ++best.evaluations;
      if (score > best.score) {
        best.score = score;
        best.config = cfg;
      }
    }
    return best;
  }

  Rng rng(seed);
  long evals = 0;
  while (evals < budget) {
    // restart point
    SwitchConfig cur = config_from_bits(model, 0);
    for (int i = 0; i < nbits; ++i) cur.on[i] = rng.next_bool() ? 1 : 0;
    double cur_score = objective(cur);
    ++evals;
    if (cur_score > best.score) {
      best.score = cur_score;
      best.config = cur;
    }

    // first-improvement bit-flip passes until a full pass stalls
    bool improved = true;
    std::vector<size_t> order(static_cast<size_t>(nbits));
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    while (improved && evals < budget) {
      improved = false;
      rng.shuffle(order);
      for (size_t bit : order) {
        if (evals >= budget) break;
        cur.flip(bit);
        const double score = objective(cur);
        ++evals;
        if (score > cur_score) {
          cur_score = score;
          improved = true;
          if (score > best.score) {
            best.score = score;
            best.config = cur;
          }
        } else {
          cur.flip(bit);  // revert
        }
      }
    }
  }
  best.evaluations = evals;
  return best;
}

// -------------------- lookup table --------------------

namespace {

int degree_bin(double deg) { return static_cast<int>(std::floor(deg)); }

std::string band_key(const Band& b) {
  std::ostringstream os;
  os << "band=" << static_cast<long long>(std::llround(b.f_lo_hz)) << ","
     << static_cast<long long>(std::llround(b.f_hi_hz));
  return os.str();
}

std::string azel_key(const char* tag, const Vec3& d) {
  const AzEl ae = to_azel(d);
  std::ostringstream os;
  os << tag << "=" << degree_bin(ae.az_deg) << "," << degree_bin(ae.el_deg);
  return os.str();
}

}  // namespace

std::string LookupTable::quantize_key(const TileFunction& target) {
  std::ostringstream os;
  switch (target.action) {
    case Action::Steer:
      os << "steer:" << azel_key("in", target.incident_dir) << ":"
         << azel_key("out", target.outgoing_dir) << ":" << band_key(target.band);
      break;
    case Action::Focus: {
      os << "focus:" << azel_key("in", target.incident_dir) << ":"
         << azel_key("dir", target.focal_point) << ":r="
         << static_cast<long long>(std::llround(target.focal_point.norm() * 1000.0))
         << ":" << band_key(target.band);
      break;
    }
    case Action::Absorb:
      os << "absorb:a=" << static_cast<long long>(std::llround(target.alpha * 1000.0)) << ":"
         << band_key(target.band);
      break;
    case Action::Reset:
      os << "reset";
      break;
  }
  return os.str();
}

std::optional<LookupTable::Entry> LookupTable::lookup(const TileFunction& target) const {
  auto it = entries_.find(quantize_key(target));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void LookupTable::store(const TileFunction& target, const SwitchConfig& config, double score) {
  entries_[quantize_key(target)] = Entry{config, score};
}

std::string LookupTable::serialize() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [key, e] : entries_) {
    os << key << " " << e.score << " " << e.config.rows << " " << e.config.cols << " ";
    for (uint8_t b : e.config.on) os << (b ? '1' : '0');
    os << "\n";
  }
  return os.str();
}

LookupTable LookupTable::deserialize(const std::string& text) {
  LookupTable table;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, bits;
    Entry e;
    if (!(ls >> key >> e.score >> e.config.rows >> e.config.cols >> bits))
      throw ParseError("lookup table line " + std::to_string(lineno) + ": malformed entry");
    if (static_cast<int>(bits.size()) != e.config.rows * e.config.cols)
      throw ParseError("lookup table line " + std::to_string(lineno) + ": bit count mismatch");
    e.config.on.reserve(bits.size());
    for (char c : bits) e.config.on.push_back(c == '1' ? 1 : 0);
    table.entries_[key] = std::move(e);
  }
  return table;
}

void LookupTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write lookup table '" + path + "'");
  out << serialize();
}

LookupTable LookupTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lookup table '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace pwe
