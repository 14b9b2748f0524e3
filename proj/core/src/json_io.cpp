#include "sloewner/json_io.hpp"

#include <cstdio>
#include <fstream>

#include "sloewner/errors.hpp"

namespace sloewner {

namespace {

using nlohmann::json;

json complex_to_json(Complex v) { return json::array({v.real(), v.imag()}); }

Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw DataError("complex value must be a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

Vector vector_from_json(const json& j, Index expected) {
  if (!j.is_array() || Index(j.size()) != expected)
    throw DataError("vector has wrong length");
  Vector v(expected);
  for (Index i = 0; i < expected; ++i) v(i) = complex_from_json(j[i]);
  return v;
}

json matrix_to_json(const Matrix& M) {
  json out = json::array();
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) out.push_back(complex_to_json(M(i, j)));
  return out;
}

Matrix matrix_from_json(const json& j, Index rows, Index cols) {
  if (!j.is_array() || Index(j.size()) != rows * cols)
    throw DataError("matrix entry count does not match dimensions");
  Matrix M(rows, cols);
  Index t = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) M(i, c) = complex_from_json(j[t++]);
  return M;
}

void append_csv_complex(std::string& line, Complex v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g", v.real(), v.imag());
  line += buf;
}

}  // namespace

json structure_to_json(const AffineStructure& structure) {
  json out = json::array();
  for (const auto& f : structure.basis()) out.push_back(f.to_term());
  return out;
}

AffineStructure structure_from_json(const json& j) {
  if (!j.is_array() || j.empty())
    throw DataError("structure must be an array of term strings");
  std::string joined;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (i) joined += ",";
    joined += j[i].get<std::string>();
  }
  return parse_structure(joined);
}

json realization_to_json(const StructuredRealization& r, bool as_full_model) {
  json out;
  out["structure"] = structure_to_json(r.structure());
  out["n"] = r.order();
  out["m"] = r.num_inputs();
  out["p"] = r.num_outputs();
  out["is_real"] = r.is_real();
  json A = json::array();
  for (const auto& Ak : r.A()) A.push_back(matrix_to_json(Ak));
  out["A"] = std::move(A);
  out["B"] = matrix_to_json(r.B());
  out["C"] = matrix_to_json(r.C());
  if (as_full_model) out["N"] = r.order();
  return out;
}

StructuredRealization realization_from_json(const json& j) {
  AffineStructure structure = structure_from_json(j.at("structure"));
  Index n = j.contains("n") ? j.at("n").get<Index>() : j.at("N").get<Index>();
  Index m = j.at("m").get<Index>();
  Index p = j.at("p").get<Index>();
  const json& A = j.at("A");
  if (!A.is_array() || int(A.size()) != structure.size())
    throw DataError("realization needs one matrix per basis function");
  std::vector<Matrix> mats;
  for (const auto& Ak : A) mats.push_back(matrix_from_json(Ak, n, n));
  Matrix B = matrix_from_json(j.at("B"), n, m);
  Matrix C = matrix_from_json(j.at("C"), p, n);
  bool is_real = j.value("is_real", false);
  return StructuredRealization(structure, std::move(mats), B, C, is_real);
}

json data_to_json(const InterpolationData& data) {
  json out;
  out["m"] = data.m;
  out["p"] = data.p;
  json left = json::array();
  for (const auto& s : data.left) {
    json e;
    e["mu"] = complex_to_json(s.mu);
    e["ell"] = vector_to_json(s.ell);
    e["f"] = vector_to_json(s.f);
    left.push_back(std::move(e));
  }
  out["left"] = std::move(left);
  json right = json::array();
  for (const auto& s : data.right) {
    json e;
    e["sigma"] = complex_to_json(s.sigma);
    e["r"] = vector_to_json(s.r);
    e["g"] = vector_to_json(s.g);
    right.push_back(std::move(e));
  }
  out["right"] = std::move(right);
  json theta = json::array();
  for (const auto& e : data.bitangential) {
    json t;
    t["i"] = e.index;
    t["val"] = complex_to_json(e.theta);
    theta.push_back(std::move(t));
  }
  out["theta"] = std::move(theta);
  if (data.has_left_derivatives()) {
    json fp = json::array();
    for (const auto& v : data.f_prime) fp.push_back(vector_to_json(v));
    out["fprime"] = std::move(fp);
  }
  if (data.has_right_derivatives()) {
    json gp = json::array();
    for (const auto& v : data.g_prime) gp.push_back(vector_to_json(v));
    out["gprime"] = std::move(gp);
  }
  return out;
}

InterpolationData data_from_json(const json& j) {
  InterpolationData data;
  data.m = j.at("m").get<int>();
  data.p = j.at("p").get<int>();
  for (const auto& e : j.at("left")) {
    LeftSample s;
    s.mu = complex_from_json(e.at("mu"));
    s.ell = vector_from_json(e.at("ell"), data.p);
    s.f = vector_from_json(e.at("f"), data.m);
    data.left.push_back(std::move(s));
  }
  for (const auto& e : j.at("right")) {
    RightSample s;
    s.sigma = complex_from_json(e.at("sigma"));
    s.r = vector_from_json(e.at("r"), data.m);
    s.g = vector_from_json(e.at("g"), data.p);
    data.right.push_back(std::move(s));
  }
  if (j.contains("theta"))
    for (const auto& e : j.at("theta"))
      data.bitangential.push_back(
          {e.at("i").get<Index>(), complex_from_json(e.at("val"))});
  if (j.contains("fprime"))
    for (const auto& e : j.at("fprime"))
      data.f_prime.push_back(vector_from_json(e, data.m));
  if (j.contains("gprime"))
    for (const auto& e : j.at("gprime"))
      data.g_prime.push_back(vector_from_json(e, data.p));
  data.validate();
  return data;
}

json error_report_to_json(const ErrorReport& report,
                          const FrequencyGrid& grid) {
  json out;
  out["max_abs"] = report.max_abs;
  out["max_rel"] = report.max_rel;
  out["argmax_abs"] = complex_to_json(report.argmax_abs_point);
  out["argmax_rel"] = complex_to_json(report.argmax_rel_point);
  json pts = json::array();
  for (std::size_t i = 0; i < report.abs_err.size(); ++i) {
    json e;
    e["omega"] = grid.points[i].imag();
    e["abs"] = report.abs_err[i];
    e["rel"] = report.rel_err[i];
    pts.push_back(std::move(e));
  }
  out["points"] = std::move(pts);
  return out;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_bode_csv(const std::filesystem::path& path,
                    const std::vector<BodePoint>& samples) {
  std::string out = "omega,re,im,magnitude_db,phase_deg,finite\n";
  for (const auto& b : samples) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                  b.omega, b.value.real(), b.value.imag(), b.magnitude_db,
                  b.phase_deg, b.finite ? 1 : 0);
    out += buf;
  }
  write_text_atomic(path, out);
}

void write_data_csv(const std::filesystem::path& path,
                    const InterpolationData& data) {
  const Index dirs = std::max(data.m, data.p);
  const Index vals = std::max(data.m, data.p);
  std::string out = "side,s_re,s_im";
  for (Index i = 0; i < dirs; ++i)
    out += ",dir_" + std::to_string(i) + "_re,dir_" + std::to_string(i) + "_im";
  for (Index i = 0; i < vals; ++i)
    out += ",val_" + std::to_string(i) + "_re,val_" + std::to_string(i) + "_im";
  out += "\n";

  auto append_row = [&](char side, Complex s, const Vector& dir,
                        const Vector& val) {
    std::string line(1, side);
    line += ",";
    append_csv_complex(line, s);
    for (Index i = 0; i < dirs; ++i) {
      line += ",";
      if (i < dir.size())
        append_csv_complex(line, dir(i));
      else
        line += ",";
    }
    for (Index i = 0; i < vals; ++i) {
      line += ",";
      if (i < val.size())
        append_csv_complex(line, val(i));
      else
        line += ",";
    }
    out += line + "\n";
  };

  for (const auto& s : data.left) append_row('L', s.mu, s.ell, s.f);
  for (const auto& s : data.right) append_row('R', s.sigma, s.r, s.g);
  write_text_atomic(path, out);
}

}  // namespace sloewner
