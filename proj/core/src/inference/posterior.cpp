#include "adexsbi/inference/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "adexsbi/common/rng.hpp"

namespace adexsbi::inference {

std::size_t PosteriorSampleSet::clipped_count() const {
  return static_cast<std::size_t>(std::count(clipped.begin(), clipped.end(), true));
}

hw::CodeVector to_code(std::span<const double> theta, bool* clipped) {
  if (theta.size() != hw::kNumFree) throw std::invalid_argument("to_code: expected 7 values");
  std::array<int, hw::kNumFree> c{};
  bool any = false;
  for (std::size_t k = 0; k < hw::kNumFree; ++k) {
    double v = theta[k];
    if (!std::isfinite(v)) throw std::invalid_argument("to_code: non-finite parameter value");
    if (v < hw::kCodeMin || v > hw::kCodeMax) {
      any = true;
      v = std::clamp<double>(v, hw::kCodeMin, hw::kCodeMax);
    }
    c[k] = static_cast<int>(std::lround(v));
  }
  if (clipped) *clipped = any;
  return hw::CodeVector(c);
}

PosteriorSampleSet samples_from_flow(const nde::FlowModel& flow, const nn::Tensor& condition, std::size_t n,
                                     std::uint64_t seed) {
  Rng rng(derive_seed(seed, streams::kPosterior, 0));
  nde::FlowModel::Samples s = flow.sample(condition, n, rng);
  PosteriorSampleSet out;
  out.seed = seed;
  out.codes.reserve(n);
  out.clipped.reserve(n);
  if (flow.spec().dim == hw::kNumFree) {
    for (std::size_t i = 0; i < n; ++i) {
      bool c = false;
      out.codes.push_back(to_code(s.theta.row(i), &c));
      out.clipped.push_back(c);
    }
  }
  out.theta = std::move(s.theta);
  out.log_prob = std::move(s.log_prob);
  return out;
}

PosteriorSampleSet posterior_samples(const nde::PosteriorEstimator& estimator, const nde::Observation& observation,
                                     std::size_t n, std::uint64_t seed) {
  return samples_from_flow(estimator.flow, estimator.condition(observation), n, seed);
}

std::size_t select_map_index(std::span<const double> log_probs) {
  std::size_t best = log_probs.size();
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    if (!std::isfinite(log_probs[i])) continue;
    if (best == log_probs.size() || log_probs[i] > log_probs[best]) best = i;
  }
  if (best == log_probs.size()) throw std::invalid_argument("select_map_sample: no finite log probability");
  return best;
}

hw::CodeVector select_map_sample(const PosteriorSampleSet& samples) {
  if (samples.codes.empty()) throw std::invalid_argument("select_map_sample: empty sample set");
  return samples.codes[select_map_index(samples.log_prob)];
}

void write_samples_csv(const std::filesystem::path& path, const PosteriorSampleSet& s) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# observation=" << s.observation_id << " model=" << s.model_id << " seed=" << s.seed << '\n';
  out << "index";
  for (auto name : hw::kParamNames) out << ',' << name;
  for (auto name : hw::kParamNames) out << ",theta_" << name;
  out << ",log_prob,clipped\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << i;
    for (int c : s.codes[i].values()) out << ',' << c;
    for (double v : s.theta.row(i)) out << ',' << v;
    out << ',' << s.log_prob[i] << ',' << (s.clipped[i] ? 1 : 0) << '\n';
  }
}

PosteriorSampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  PosteriorSampleSet s;
  std::string line;
  std::getline(in, line);
  {
    std::istringstream meta(line.substr(line.find_first_not_of("# ")));
    std::string tok;
    while (meta >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "observation") s.observation_id = val;
      if (key == "model") s.model_id = val;
      if (key == "seed") s.seed = std::stoull(val);
    }
  }
  std::getline(in, line);  // header
  std::vector<double> theta;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 1 + 2 * hw::kNumFree + 2) throw std::runtime_error("samples file: wrong column count");
    std::array<int, hw::kNumFree> c{};
    for (std::size_t k = 0; k < hw::kNumFree; ++k) c[k] = std::stoi(cells[1 + k]);
    s.codes.emplace_back(c);
    for (std::size_t k = 0; k < hw::kNumFree; ++k) theta.push_back(std::stod(cells[1 + hw::kNumFree + k]));
    s.log_prob.push_back(std::stod(cells[1 + 2 * hw::kNumFree]));
    s.clipped.push_back(cells.back() == "1");
  }
  s.theta = nn::Tensor(nn::Shape{s.codes.size(), hw::kNumFree}, theta);
  return s;
}

}  // namespace adexsbi::inference
