#include "multikoop/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>

#include "multikoop/linalg.hpp"

namespace multikoop {

namespace {

using Cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

constexpr double kPi = 3.14159265358979323846;

// sigma_min(zI - T) for upper-triangular T: inverse power iteration on
// (M^H M)^-1 with two triangular solves per step. The estimate approaches
// sigma_min from above, so the Kreiss objective is never overestimated.
double sigma_min_shifted(const MatrixXcd& t, Cplx z) {
  const long n = t.rows();
  MatrixXcd m = -t;
  m.diagonal().array() += z;
  VectorXcd v(n);
  for (long i = 0; i < n; ++i) v[i] = Cplx(1.0 + 0.01 * static_cast<double>(i % 7), 0.1);
  v.normalize();
  double lambda = 0.0;
  for (int iter = 0; iter < 40; ++iter) {
    const VectorXcd u = m.adjoint().triangularView<Eigen::Lower>().solve(v);
    const VectorXcd y = m.triangularView<Eigen::Upper>().solve(u);
    const double next = y.norm();
    v = y / next;
    const bool settled = std::abs(next - lambda) <= 1e-13 * next;
    lambda = next;
    if (settled) break;
  }
  return 1.0 / std::sqrt(lambda);
}

void require_stable(const MatrixXd& a, const std::string& op) {
  const double rho = spectral_radius(a);
  if (rho >= 1.0)
    throw InstabilityError(op + ": matrix has spectral radius " + std::to_string(rho) + " >= 1", rho);
}

MatrixXd lyapunov_core(const MatrixXd& f, const MatrixXd& rhs) {
  const long n = f.rows();
  if (n <= 40) {
    MatrixXd m(n * n, n * n);
    for (long col_out = 0; col_out < n; ++col_out)
      for (long row_out = 0; row_out < n; ++row_out)
        for (long col_in = 0; col_in < n; ++col_in)
          for (long row_in = 0; row_in < n; ++row_in)
            m(col_out * n + row_out, col_in * n + row_in) = f(col_out, col_in) * f(row_out, row_in);
    m -= MatrixXd::Identity(n * n, n * n);
    VectorXd b(n * n);
    for (long j = 0; j < n; ++j) b.segment(j * n, n) = -rhs.col(j);
    const VectorXd v = m.partialPivLu().solve(b);
    MatrixXd x(n, n);
    for (long j = 0; j < n; ++j) x.col(j) = v.segment(j * n, n);
    return 0.5 * (x + x.transpose());
  }
  // Doubling: after k rounds x = sum_{j<2^k} f^j rhs f^j^T.
  MatrixXd x = rhs;
  MatrixXd p = f;
  for (int iter = 0; iter < 100; ++iter) {
    const MatrixXd term = p * x * p.transpose();
    x += term;
    if (term.norm() <= 1e-16 * x.norm()) break;
    p = p * p;
  }
  return 0.5 * (x + x.transpose());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return std::string(buf);
}

}  // namespace

double initial_growth(const MatrixXd& a) { return std::log(spectral_norm(a)); }

KreissResult kreiss_bound(const MatrixXd& a, const KreissOptions& options) {
  require_stable(a, "kreiss_bound");
  const Eigen::ComplexSchur<MatrixXcd> schur(a.cast<Cplx>());
  const MatrixXcd& t = schur.matrixT();

  const auto objective = [&](double r, double theta) {
    return (r - 1.0) / sigma_min_shifted(t, std::polar(r, theta));
  };

  KreissResult best;
  best.value = 0.0;
  // Initial pass: log-spaced radii in (1, 10], uniform angles.
  for (int k = 1; k <= options.n_radii; ++k) {
    const double r = std::pow(10.0, static_cast<double>(k) / options.n_radii);
    for (int j = 0; j < options.n_angles; ++j) {
      const double theta = 2.0 * kPi * j / options.n_angles;
      const double v = objective(r, theta);
      if (v > best.value) {
        best.value = v;
        best.z_abs = r;
        best.z_arg = theta;
      }
    }
  }
  double dr_log = 1.0 / options.n_radii;          // log10 spacing
  double dth = 2.0 * kPi / options.n_angles;
  for (int pass = 0; pass < options.refine_passes; ++pass) {
    const double lr = std::log10(best.z_abs);
    const double r_lo = std::pow(10.0, std::max(lr - dr_log, 0.0));
    const double r_hi = std::pow(10.0, std::min(lr + dr_log, 1.0));
    const double th_lo = best.z_arg - dth;
    const double th_hi = best.z_arg + dth;
    const int grid = 9;
    for (int k = 0; k <= grid; ++k) {
      const double lrk = std::log10(r_lo) + (std::log10(r_hi) - std::log10(r_lo)) * k / grid;
      const double r = std::pow(10.0, lrk);
      if (r <= 1.0) continue;
      for (int j = 0; j <= grid; ++j) {
        const double theta = th_lo + (th_hi - th_lo) * j / grid;
        const double v = objective(r, theta);
        if (v > best.value) {
          best.value = v;
          best.z_abs = r;
          best.z_arg = theta;
        }
      }
    }
    dr_log /= grid;
    dth = (th_hi - th_lo) / grid;
  }
  best.boundary_warning = best.value > 1.0 + 1e-9 && best.z_abs >= 10.0 * (1.0 - 1e-9);
  // The objective tends to 1 as |z| grows, so the supremum is never below 1.
  if (best.value < 1.0) {
    best.value = 1.0;
    best.z_abs = std::numeric_limits<double>::infinity();
    best.z_arg = 0.0;
  }
  return best;
}

MatrixXd solve_discrete_lyapunov(const MatrixXd& f, const MatrixXd& rhs) {
  if (f.rows() != f.cols() || rhs.rows() != rhs.cols() || f.rows() != rhs.rows())
    throw DimensionError("solve_discrete_lyapunov: F and RHS must be square with equal sizes");
  if ((rhs - rhs.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff()))
    throw ConfigError("solve_discrete_lyapunov: RHS is not symmetric");
  require_stable(f, "solve_discrete_lyapunov");

  MatrixXd x = lyapunov_core(f, 0.5 * (rhs + rhs.transpose()));
  const double scale = std::max(rhs.norm(), 1e-300);
  MatrixXd residual = f * x * f.transpose() - x + rhs;
  if (residual.norm() > 1e-11 * scale) {
    x += lyapunov_core(f, 0.5 * (residual + residual.transpose()));
    residual = f * x * f.transpose() - x + rhs;
    if (residual.norm() > 1e-10 * scale)
      throw ConvergenceError("solve_discrete_lyapunov: relative residual " +
                                 std::to_string(residual.norm() / scale) + " exceeds 1e-10",
                             residual.norm() / scale);
  }
  return x;
}

GramianResult gramian_cross(const MatrixXd& f, const MatrixXd& input) {
  GramianResult result;
  result.x = solve_discrete_lyapunov(f, input * input.transpose());
  result.norm = spectral_norm(result.x);
  return result;
}

GramianResult gramian_cross(const StructuredKoopman& model, int i, int j) {
  const auto& ag = model.agents[i];
  const auto it = ag.k_xx_cross.find(j);
  if (it == ag.k_xx_cross.end())
    throw ConfigError("gramian_cross: agent " + std::to_string(i + 1) + " has no coupling block for agent " +
                      std::to_string(j + 1));
  const MatrixXd gain = MatrixXd::Identity(ag.k_xx.rows(), ag.k_xx.cols()) - ag.k_xx;
  return gramian_cross(ag.k_xx, gain * it->second);
}

GramianResult gramian_cross(const ReducedModel& reduced, int i, int j) {
  const auto& r = reduced.agents[i];
  const auto it = r.g.find(j);
  if (it == r.g.end())
    throw ConfigError("gramian_cross: agent " + std::to_string(i + 1) + " has no coupling block for agent " +
                      std::to_string(j + 1));
  return gramian_cross(r.b_xx, it->second);
}

GramianResult gramian_control(const CombinedSystem& sys, const std::vector<int>& agents) {
  MatrixXd b = MatrixXd::Zero(sys.b.rows(), sys.b.cols());
  for (int agent : agents) {
    const int begin = sys.u_offset[agent];
    const int len = sys.u_offset[agent + 1] - begin;
    b.middleCols(begin, len) = sys.b.middleCols(begin, len);
  }
  return gramian_cross(sys.a, b);
}

double perturbation_gain(const MatrixXd& a, int col_begin, int col_dim,
                         const PerturbationOptions& options) {
  require_stable(a, "perturbation_gain");
  MatrixXd block = a.middleCols(col_begin, col_dim);  // agent columns of a^k, k = 1
  double best = 0.0;
  for (int k = 1; k <= options.k_cap; ++k) {
    const double s = spectral_norm(block);
    const double value = s * s;
    best = std::max(best, value);
    if (k >= options.k_start && value <= options.decay_tol * best) break;
    block = a * block;
  }
  return best;
}

double perturbation_gain(const CombinedSystem& sys, int agent, const PerturbationOptions& options) {
  return perturbation_gain(sys.a, sys.offset[agent], sys.block_dim(agent), options);
}

namespace {

MetricsEntry make_entry(const std::string& name, const MatrixXd& a) {
  MetricsEntry e;
  e.matrix = name;
  e.initial_growth = initial_growth(a);
  try {
    const KreissResult kr = kreiss_bound(a);
    e.t_bound = kr.value;
    e.t_bound_boundary_warning = kr.boundary_warning;
  } catch (const Error& err) {
    e.errors.push_back(std::string("t_bound: ") + err.what());
  }
  return e;
}

template <typename Fn>
void try_metric(MetricsEntry& e, std::optional<double>& slot, const std::string& label, Fn&& fn) {
  try {
    slot = fn();
  } catch (const Error& err) {
    e.errors.push_back(label + ": " + err.what());
  }
}

}  // namespace

MetricsReport analyze(const StructuredKoopman& model, const ReducedModel* reduced) {
  const int n = model.n_agents();
  MetricsReport report;
  report.metadata["variant"] = to_string(model.variant);
  report.metadata["kreiss_grid"] = {{"n_radii", KreissOptions{}.n_radii},
                                    {"n_angles", KreissOptions{}.n_angles},
                                    {"refine_passes", KreissOptions{}.refine_passes}};
  report.metadata["perturbation"] = {{"k_start", PerturbationOptions{}.k_start},
                                     {"k_cap", PerturbationOptions{}.k_cap}};

  const CombinedSystem comb = assemble_combined(model);
  const bool has_control = comb.b.cols() > 0;

  std::vector<int> all_agents(n);
  for (int i = 0; i < n; ++i) all_agents[i] = i;

  for (int i = 0; i < n; ++i) {
    MetricsEntry e = make_entry("K_xx_" + std::to_string(i + 1) + std::to_string(i + 1),
                                model.agents[i].k_xx);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      try_metric(e, e.gramian_cross_norm, "gramian_cross",
                 [&] { return gramian_cross(model, i, j).norm; });
      break;  // two-agent tables report the single other-agent coupling
    }
    if (has_control)
      try_metric(e, e.gramian_control_norm, "gramian_control",
                 [&] { return gramian_control(comb, {i}).norm; });
    try_metric(e, e.p_max, "p_max", [&] { return perturbation_gain(comb, i); });
    report.entries.push_back(std::move(e));
  }
  {
    MetricsEntry e = make_entry("K_comb", comb.a);
    if (has_control)
      try_metric(e, e.gramian_control_norm, "gramian_control",
                 [&] { return gramian_control(comb, all_agents).norm; });
    report.entries.push_back(std::move(e));
  }

  if (reduced != nullptr) {
    const CombinedSystem rcomb = assemble_combined(*reduced);
    for (int i = 0; i < n; ++i) {
      MetricsEntry e = make_entry("B_xx_" + std::to_string(i + 1), reduced->agents[i].b_xx);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        try_metric(e, e.gramian_cross_norm, "gramian_cross",
                   [&] { return gramian_cross(*reduced, i, j).norm; });
        break;
      }
      try_metric(e, e.gramian_control_norm, "gramian_control",
                 [&] { return gramian_control(rcomb, {i}).norm; });
      try_metric(e, e.p_max, "p_max", [&] { return perturbation_gain(rcomb, i); });
      report.entries.push_back(std::move(e));
    }
    MetricsEntry e = make_entry("B_xx_comb", rcomb.a);
    try_metric(e, e.gramian_control_norm, "gramian_control",
               [&] { return gramian_control(rcomb, all_agents).norm; });
    report.entries.push_back(std::move(e));
  }
  return report;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["metadata"] = metadata;
  auto& cols = j["columns"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json c;
    c["matrix"] = e.matrix;
    const auto put = [&c](const char* key, const std::optional<double>& v) {
      if (v.has_value())
        c[key] = *v;
      else
        c[key] = nullptr;
    };
    put("initial_growth", e.initial_growth);
    put("t_bound", e.t_bound);
    put("gramian_cross_norm", e.gramian_cross_norm);
    put("gramian_control_norm", e.gramian_control_norm);
    put("p_max", e.p_max);
    c["t_bound_boundary_warning"] = e.t_bound_boundary_warning;
    if (!e.errors.empty()) c["errors"] = e.errors;
    cols.push_back(std::move(c));
  }
  return j;
}

std::string MetricsReport::to_table() const {
  const std::vector<std::string> row_labels = {"|X^c_i|", "|X^c_ij|", "P_max_i", "log|A|_2", "T_bound"};
  const auto cell = [this](std::size_t row, const MetricsEntry& e) -> std::string {
    const std::optional<double>* v = nullptr;
    switch (row) {
      case 0: v = &e.gramian_control_norm; break;
      case 1: v = &e.gramian_cross_norm; break;
      case 2: v = &e.p_max; break;
      case 3: v = &e.initial_growth; break;
      case 4: v = &e.t_bound; break;
    }
    return (v != nullptr && v->has_value()) ? fmt(**v) : "--";
  };
  std::vector<std::size_t> widths;
  widths.push_back(9);
  for (const auto& e : entries) widths.push_back(std::max<std::size_t>(e.matrix.size(), 9));
  std::string out = "Metric";
  out.append(widths[0] - 6 + 2, ' ');
  for (std::size_t c = 0; c < entries.size(); ++c) {
    out += entries[c].matrix;
    out.append(widths[c + 1] - entries[c].matrix.size() + 2, ' ');
  }
  out += '\n';
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    out += row_labels[r];
    out.append(widths[0] - row_labels[r].size() + 2, ' ');
    for (std::size_t c = 0; c < entries.size(); ++c) {
      const std::string s = cell(r, entries[c]);
      out += s;
      if (c + 1 < entries.size()) out.append(widths[c + 1] > s.size() ? widths[c + 1] - s.size() + 2 : 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace multikoop
