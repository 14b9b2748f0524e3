#include "sloewner/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "sloewner/errors.hpp"
#include "sloewner/json_io.hpp"
#include "sloewner/models.hpp"

namespace sloewner {

namespace {

std::vector<double> logspace(double a, double b, int count) {
  std::vector<double> v(count);
  double la = std::log10(a), lb = std::log10(b);
  for (int i = 0; i < count; ++i)
    v[i] = std::pow(10.0, la + (lb - la) * (count == 1 ? 0.0 : double(i) / (count - 1)));
  return v;
}

double spectral_norm(const Matrix& M) {
  if (M.rows() == 1 && M.cols() == 1) return std::abs(M(0, 0));
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

FrequencyGrid log_grid(double omega_start, double omega_end, int count) {
  if (count < 2) throw DataError("grid needs at least two points");
  if (omega_start <= 0.0 || omega_end <= 0.0)
    throw DataError("log grid needs positive frequency bounds");
  FrequencyGrid g{FrequencyGrid::Kind::Log, omega_start, omega_end, count, {}};
  for (double w : logspace(omega_start, omega_end, count))
    g.points.emplace_back(0.0, w);
  std::sort(g.points.begin(), g.points.end(),
            [](Complex a, Complex b) { return std::abs(a.imag()) < std::abs(b.imag()); });
  return g;
}

FrequencyGrid linear_grid(double omega_start, double omega_end, int count) {
  if (count < 2) throw DataError("grid needs at least two points");
  FrequencyGrid g{FrequencyGrid::Kind::Linear, omega_start, omega_end, count, {}};
  for (int i = 0; i < count; ++i)
    g.points.emplace_back(
        0.0, omega_start + (omega_end - omega_start) * double(i) / (count - 1));
  std::sort(g.points.begin(), g.points.end(),
            [](Complex a, Complex b) { return std::abs(a.imag()) < std::abs(b.imag()); });
  return g;
}

std::vector<BodePoint> bode_grid(const TransferOracle& evaluator,
                                 const FrequencyGrid& grid) {
  if (evaluator.num_inputs() != 1 || evaluator.num_outputs() != 1)
    throw DataError("bode sweep expects a SISO evaluator");

  const Index count = Index(grid.points.size());
  std::vector<BodePoint> out(count);
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < count; ++i) {
    BodePoint& b = out[i];
    b.omega = grid.points[i].imag();
    try {
      b.value = evaluator.eval(grid.points[i])(0, 0);
      b.finite = std::isfinite(std::abs(b.value));
    } catch (const SingularKernel&) {
      b.finite = false;
    } catch (const OracleError&) {
      b.finite = false;
    }
    if (b.finite) {
      b.magnitude_db = 20.0 * std::log10(std::abs(b.value));
      b.phase_deg = std::arg(b.value) * 180.0 / M_PI;
    }
  }

  // Unwrap the phase along the sweep.
  double offset = 0.0;
  double prev = out.empty() ? 0.0 : out[0].phase_deg;
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!out[i].finite) continue;
    double raw = out[i].phase_deg;
    double delta = raw + offset - prev;
    while (delta > 180.0) {
      offset -= 360.0;
      delta -= 360.0;
    }
    while (delta < -180.0) {
      offset += 360.0;
      delta += 360.0;
    }
    out[i].phase_deg = raw + offset;
    prev = out[i].phase_deg;
  }
  return out;
}

ErrorReport error_metrics(const TransferOracle& candidate,
                          const std::vector<Matrix>& reference_values,
                          const FrequencyGrid& grid) {
  if (reference_values.size() != grid.points.size())
    throw DataError("reference sweep does not match the grid");

  const Index count = Index(grid.points.size());
  ErrorReport report;
  report.abs_err.resize(count);
  report.rel_err.resize(count);

#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < count; ++i) {
    double abs_err;
    try {
      Matrix diff = candidate.eval(grid.points[i]) - reference_values[i];
      abs_err = spectral_norm(diff);
    } catch (const SingularKernel&) {
      abs_err = std::numeric_limits<double>::infinity();
    }
    double ref = spectral_norm(reference_values[i]);
    report.abs_err[i] = abs_err;
    report.rel_err[i] = ref > 0.0 ? abs_err / ref
                                  : (abs_err == 0.0
                                         ? 0.0
                                         : std::numeric_limits<double>::infinity());
  }

  for (Index i = 0; i < count; ++i) {
    if (report.abs_err[i] >= report.max_abs) {
      report.max_abs = report.abs_err[i];
      report.argmax_abs_point = grid.points[i];
    }
    if (report.rel_err[i] >= report.max_rel) {
      report.max_rel = report.rel_err[i];
      report.argmax_rel_point = grid.points[i];
    }
  }
  return report;
}

ErrorReport error_metrics(const TransferOracle& candidate,
                          const TransferOracle& reference,
                          const FrequencyGrid& grid) {
  const Index count = Index(grid.points.size());
  std::vector<Matrix> ref(count);
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < count; ++i) ref[i] = reference.eval(grid.points[i]);
  return error_metrics(candidate, ref, grid);
}

namespace {

struct ExperimentSetup {
  FullModel model;
  const TransferOracle* reference;  // model oracle or analytic oracle
  double band_lo, band_hi;
};

}  // namespace

ExperimentResult run_experiment(const std::string& name, int n,
                                const ExperimentOptions& opts) {
  if (n < 2 || n % 2 != 0)
    throw DataError(
        "experiments sample conjugate pairs; n must be even and >= 2");

  std::optional<FullModel> model;
  std::optional<DuctSystem> duct;
  double lo = 0.0, hi = 0.0;
  if (name == "delay") {
    model = delay_toeplitz_model(500, 5.0, 0.01, 1.0);
    lo = 1.0;
    hi = 100.0;
  } else if (name == "rod") {
    model = heated_rod_model(100);
    lo = 0.1;
    hi = 1000.0;
  } else if (name == "duct") {
    duct = acoustic_duct(1.0, 0.5, 1.0, 1.0);
    model = duct->exact;
    lo = 0.1;
    hi = 10.0;
  } else if (name == "beam") {
    model = beam_model(200, 0.05, 0.05);
    lo = 1e-5;
    hi = 1e2;
  } else {
    throw DataError("unknown experiment '" + name +
                    "' (expected delay|rod|duct|beam)");
  }

  RealizationOracle model_oracle(*model);
  const TransferOracle& reference =
      duct ? static_cast<const TransferOracle&>(duct->oracle)
           : static_cast<const TransferOracle&>(model_oracle);

  const AffineStructure& structure = model->structure();
  const int K = structure.size();
  const int qf = opts.qf;
  const int qg = opts.qg < 0 ? K - qf : opts.qg;

  std::vector<std::string> methods;
  if (opts.method == "all") {
    methods = {"loewner", "additional", "hermite"};
  } else if (opts.method == "loewner" || opts.method == "additional" ||
             opts.method == "hermite" || opts.method == "auto") {
    methods = {opts.method == "auto" ? std::string("additional")
                                     : opts.method};
  } else {
    throw DataError("unknown experiment method '" + opts.method + "'");
  }

  // Base data: n log-equidistant points alternated between the sides, plus
  // conjugates (n samples per side).
  auto alternating_request = [&](bool hermite) {
    SampleRequest req;
    std::vector<double> omegas = logspace(lo, hi, n);
    for (int j = 0; j < n; ++j) {
      Complex s(0.0, omegas[j]);
      auto& side = (j % 2 == 0) ? req.left_points : req.right_points;
      side.push_back(s);
      side.push_back(std::conj(s));
    }
    req.want_hermite = hermite;
    req.want_bitangential = false;
    return req;
  };

  // Additional-points pool: K*(n/2) points dealt round-robin across the
  // Q_F + Q_G group slots, plus conjugates.
  auto pooled_request = [&]() {
    SampleRequest req;
    const int total = K * (n / 2);
    std::vector<double> omegas = logspace(lo, hi, total);
    for (int t = 0; t < total; ++t) {
      Complex s(0.0, omegas[t]);
      auto& side = (t % K) < qf ? req.left_points : req.right_points;
      side.push_back(s);
      side.push_back(std::conj(s));
    }
    req.want_hermite = false;
    req.want_bitangential = false;
    return req;
  };

  ExperimentResult result;
  result.grid = log_grid(lo, hi, opts.grid_points);

  std::vector<Matrix> reference_sweep(result.grid.points.size());
  {
    const Index count = Index(result.grid.points.size());
#pragma omp parallel for schedule(dynamic)
    for (Index i = 0; i < count; ++i)
      reference_sweep[i] = reference.eval(result.grid.points[i]);
  }

  for (const std::string& method : methods) {
    if (method == "loewner") {
      InterpolationData data =
          tangential_sample(reference, alternating_request(false));
      result.realizations.emplace(method, loewner_realization(data));
    } else if (method == "additional") {
      InterpolationData pool = tangential_sample(reference, pooled_request());
      RealizeOptions ropts;
      ropts.method = RealizeOptions::Method::Additional;
      ropts.qf = qf;
      ropts.qg = qg;
      ropts.make_real = opts.make_real;
      ropts.truncation_tol = opts.truncation_tol;
      ropts.seed = opts.seed;
      result.realizations.emplace(method, realize(pool, structure, ropts));
    } else {  // hermite
      InterpolationData data =
          tangential_sample(reference, alternating_request(true));
      RealizeOptions ropts;
      ropts.method = RealizeOptions::Method::Hermite;
      ropts.make_real = opts.make_real;
      ropts.truncation_tol = opts.truncation_tol;
      ropts.seed = opts.seed;
      result.realizations.emplace(method, realize(data, structure, ropts));
    }
    RealizationOracle rom_oracle(result.realizations.at(method));
    result.errors.emplace(
        method, error_metrics(rom_oracle, reference_sweep, result.grid));
  }

  if (!opts.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::path dir(opts.out_dir);
    fs::create_directories(dir);
    write_bode_csv(dir / (name + "_reference_bode.csv"),
                   bode_grid(reference, result.grid));
    nlohmann::json report;
    report["experiment"] = name;
    report["n"] = n;
    for (const auto& [method, rom] : result.realizations) {
      write_json_file(dir / (name + "_" + method + "_rom.json"),
                      realization_to_json(rom));
      RealizationOracle rom_oracle(rom);
      write_bode_csv(dir / (name + "_" + method + "_bode.csv"),
                     bode_grid(rom_oracle, result.grid));
      report["errors"][method] =
          error_report_to_json(result.errors.at(method), result.grid);
    }
    write_json_file(dir / (name + "_report.json"), report);
  }

  return result;
}

}  // namespace sloewner
