#include "epifit/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace epifit {

double AxisBox::volume() const {
  double v = 1.0;
  for (Eigen::Index i = 0; i < lower.size(); ++i) v *= upper[i] - lower[i];
  return v;
}

bool AxisBox::contains_closed(const Eigen::VectorXd& x) const {
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  return true;
}

double MixtureComponent::region_volume() const {
  double v = 0.0;
  for (const auto& b : boxes) v += b.volume();
  return v;
}

double MixtureOfUniforms::density(const Eigen::VectorXd& x) const {
  double acc = 0.0;
  for (const auto& c : components) {
    for (const auto& b : c.boxes) {
      if (b.contains_closed(x)) {
        acc += c.weight / c.region_volume();
        break;
      }
    }
  }
  return acc;
}

void MixtureOfUniforms::validate() const {
  box.validate();
  if (components.empty()) fail(Errc::invalid_argument, "mixture needs components");
  double wsum = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0) fail(Errc::invalid_argument, "mixture weights must be >= 0");
    wsum += c.weight;
    if (c.boxes.empty()) fail(Errc::invalid_argument, "mixture component without region");
    if (c.region_volume() <= 0.0)
      fail(Errc::invalid_argument, "mixture component region has zero volume");
    for (const auto& b : c.boxes) {
      if (b.lower.size() != box.dim())
        fail(Errc::invalid_argument, "mixture region dimension mismatch");
      for (int i = 0; i < box.dim(); ++i)
        if (b.lower[i] < box.lower[i] - 1e-12 || b.upper[i] > box.upper[i] + 1e-12)
          fail(Errc::invalid_argument, "mixture region outside the domain box");
    }
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    fail(Errc::invalid_argument, "mixture weights must sum to 1");
}

MixtureOfUniforms MixtureOfUniforms::two_bump_default() {
  MixtureOfUniforms mix;
  mix.box.lower = Eigen::Vector2d(0.0, 0.0);
  mix.box.upper = Eigen::Vector2d(1.0, 1.0);

  const double low = 0.6150;   // background level
  const double high = 3.0;     // bump level
  // One bump of area A adds (high - low) * A of mass above the background;
  // two equal bumps and a unit total integral pin A.
  const double area = (1.0 - low) / (2.0 * (high - low));
  const double half_side = 0.5 * std::sqrt(area);
  const Eigen::Vector2d m1(0.4702, 0.4657);
  const Eigen::Vector2d m2(0.7746, 0.7773);

  MixtureComponent background;
  background.weight = low;
  background.boxes.push_back({mix.box.lower, mix.box.upper});
  MixtureComponent bump1, bump2;
  bump1.weight = (high - low) * area;
  bump2.weight = bump1.weight;
  bump1.boxes.push_back({(m1.array() - half_side).matrix(), (m1.array() + half_side).matrix()});
  bump2.boxes.push_back({(m2.array() - half_side).matrix(), (m2.array() + half_side).matrix()});
  mix.components = {background, bump1, bump2};
  mix.validate();
  return mix;
}

Sample sample_mixture(const MixtureOfUniforms& mix, int n, std::uint64_t seed) {
  if (n < 1) fail(Errc::invalid_argument, "sample size must be >= 1");
  mix.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int d = mix.box.dim();
  Sample s;
  s.covariates.resize(n, d);
  for (int r = 0; r < n; ++r) {
    double u = unif(rng);
    const MixtureComponent* comp = &mix.components.back();
    for (const auto& c : mix.components) {
      if (u < c.weight) {
        comp = &c;
        break;
      }
      u -= c.weight;
    }
    double uv = unif(rng) * comp->region_volume();
    const AxisBox* bx = &comp->boxes.back();
    for (const auto& b : comp->boxes) {
      if (uv < b.volume()) {
        bx = &b;
        break;
      }
      uv -= b.volume();
    }
    for (int i = 0; i < d; ++i)
      s.covariates(r, i) = bx->lower[i] + unif(rng) * (bx->upper[i] - bx->lower[i]);
  }
  return s;
}

std::pair<double, double> kl_monte_carlo(const MixtureOfUniforms& f0,
                                         const EpiSpline& f, int m,
                                         std::uint64_t seed) {
  if (m < 1) fail(Errc::invalid_argument, "kl_monte_carlo needs m >= 1");
  const Sample z = sample_mixture(f0, m, seed);
  Eigen::VectorXd fz;
  f.evaluate_batch(z.covariates, fz);
  double acc = 0.0;
  Eigen::VectorXd terms(m);
  for (int i = 0; i < m; ++i) {
    if (fz[i] <= 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
    const double t = std::log(f0.density(z.covariates.row(i).transpose())) -
                     std::log(fz[i]);
    terms[i] = t;
    acc += t;
  }
  const double mean = acc / m;
  double var = 0.0;
  for (int i = 0; i < m; ++i) var += (terms[i] - mean) * (terms[i] - mean);
  const double se = m > 1 ? std::sqrt(var / (static_cast<double>(m) * (m - 1))) : 0.0;
  return {mean, se};
}

EpiSpline truth_projection(const MixtureOfUniforms& mix,
                           std::shared_ptr<const SimplicialComplex> complex) {
  const int d1 = complex->dim() + 1;
  Eigen::VectorXd vvals(complex->num_vertices());
  for (int v = 0; v < complex->num_vertices(); ++v)
    vvals[v] = mix.density(complex->vertex(v));
  Eigen::VectorXd h(static_cast<Eigen::Index>(complex->num_simplices()) * d1);
  for (int k = 0; k < complex->num_simplices(); ++k)
    for (int i = 0; i < d1; ++i) h[k * d1 + i] = vvals[complex->simplex_vertex(k, i)];
  return EpiSpline(complex, h);
}

namespace {

StudyRow run_cell(const MixtureOfUniforms& mix, const EstimationConfig& base, int n,
                  std::uint64_t seed, int kl_samples, int dl_ball_samples,
                  int dl_rho_nodes) {
  StudyRow row;
  row.n = n;
  row.seed = seed;
  const auto& cells = base.schedule.back();
  int N = 1;
  for (int c : cells) N *= c;
  for (int i = 2; i <= base.box.dim(); ++i) N *= i;
  row.N = N;
  row.lambda = base.lambda;

  const Sample sample = sample_mixture(mix, n, seed);
  EstimationConfig cfg = base;
  cfg.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  const EstimateResult res = run(cfg, sample);
  row.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  row.feasible = res.levels.back().feasible_semantic;
  const int d = base.box.dim();
  row.n_variables = N * (d + 1) + (base.lambda > 0.0 ? N * d : 0);

  auto [kl, se] = kl_monte_carlo(mix, res.estimate, kl_samples,
                                 seed ^ 0x9e3779b97f4a7c15ULL);
  row.kl = kl;
  row.kl_se = se;

  HypoDistanceConfig hcfg = HypoDistanceConfig::defaults_for(base.box);
  hcfg.ball_samples = dl_ball_samples;
  hcfg.rho_nodes = dl_rho_nodes;
  hcfg.seed = 7;
  const EpiSpline truth = truth_projection(mix, res.estimate.complex_ptr());
  row.dl_truth = dl(res.estimate, truth, hcfg).dl_value;
  return row;
}

}  // namespace

StudyResult consistency_study(const ConsistencyStudyConfig& cfg) {
  cfg.mixture.validate();
  StudyResult out;
  struct Task {
    int n;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int n : cfg.n_values)
    for (std::uint64_t s : cfg.seeds) tasks.push_back({n, s});
  out.rows.resize(tasks.size());

  const int workers = std::max(1, cfg.threads);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      out.rows[i] = run_cell(cfg.mixture, cfg.estimation, tasks[i].n, tasks[i].seed,
                             cfg.kl_samples, cfg.dl_ball_samples, cfg.dl_rho_nodes);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

double median_over_seeds(const StudyResult& r, int n, double StudyRow::*field) {
  std::vector<double> vals;
  for (const auto& row : r.rows)
    if (row.n == n) vals.push_back(row.*field);
  if (vals.empty()) fail(Errc::invalid_argument, "no rows for requested n");
  std::sort(vals.begin(), vals.end());
  const std::size_t m = vals.size();
  return m % 2 == 1 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
}

StudyResult scaling_study(const ScalingStudyConfig& cfg) {
  cfg.mixture.validate();
  if (cfg.mixture.box.dim() != 2)
    fail(Errc::invalid_argument, "scaling study expects the planar setup");
  StudyResult out;
  for (int N : cfg.N_values) {
    const int c = static_cast<int>(std::lround(std::sqrt(N / 2.0)));
    if (2 * c * c != N)
      fail(Errc::invalid_argument, "N must be twice a square (grid of cells)");
    EstimationConfig base = cfg.estimation;
    base.schedule = {{c, c}};
    for (int n : cfg.n_values) {
      StudyRow row;
      row.n = n;
      row.seed = cfg.seed;
      row.N = N;
      row.lambda = base.lambda;
      const Sample sample = sample_mixture(cfg.mixture, n, cfg.seed);
      EstimationConfig run_cfg = base;
      run_cfg.seed = cfg.seed;
      const auto t0 = std::chrono::steady_clock::now();
      const EstimateResult res = run(run_cfg, sample);
      row.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row.feasible = res.levels.back().feasible_semantic;
      row.n_variables = N * 3 + (base.lambda > 0.0 ? N * 2 : 0);
      row.kl = 0.0;
      row.kl_se = 0.0;
      row.dl_truth = 0.0;
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace epifit
