#pragma once

// Command implementations behind the shell_korn executable: config parsing,
// sweeps, CSV / fit summary emission and the report table and plot.

#include "shellkorn/geometry.hpp"
#include "shellkorn/scaling.hpp"
#include "shellkorn/spectral.hpp"

#include "json.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <locale>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace shellkorn::cli {

namespace fs = std::filesystem;

enum ExitCode { kPass = 0, kFailure = 1, kUsage = 2 };

/// Malformed or inconsistent configuration (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::optional<std::string> surface;
  std::optional<std::string> quantity;
  double omega = 2.0 * std::numbers::pi;
  std::optional<double> length;  // surface default when unset
  double radius = 1.0;

  std::vector<double> h;  // explicit grid; empty means the geometric grid below
  double h_max = 1e-1;
  double h_min = 1e-3;
  int h_points = 7;

  ResolutionPolicy policy = ResolutionPolicy::adaptive;
  Resolution resolution;  // fixed policy

  int drop_first = 1;
  std::uint64_t seed = 1;
  std::string out = "shell_korn_out";

  bool exact_volume_element = false;
  int branch = 1;
  double phase_wavenumber = default_phase_wavenumber;
  bool export_matrices = false;
  bool constrained = true;

  SurfacePatch make_patch() const {
    if (!surface) throw ConfigError("config: missing required key 'surface'");
    SurfaceSpec spec{*surface, omega, length.value_or(std::numeric_limits<double>::quiet_NaN()), radius};
    try {
      return make_surface(spec);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  std::vector<double> grid() const {
    if (!h.empty()) return h;
    try {
      return geometric_grid(h_max, h_min, h_points);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& v) {
  if (v.empty()) throw std::invalid_argument("expected a number");
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  return x;
}

inline long long to_integer(const std::string& v) {
  if (v.empty()) throw std::invalid_argument("expected an integer");
  char* end = nullptr;
  errno = 0;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || errno == ERANGE) {
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  }
  return x;
}

inline bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

inline int positive_int(const std::string& v, int lo = 1) {
  const auto x = to_integer(v);
  if (x < lo || x > 100000) throw std::invalid_argument("value out of range: " + v);
  return static_cast<int>(x);
}

inline double positive_double(const std::string& v) {
  const double x = to_double(v);
  if (!(x > 0.0)) throw std::invalid_argument("expected a positive number, got '" + v + "'");
  return x;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"surface", [](RunConfig& c, const std::string& v) { c.surface = v; }},
      {"quantity",
       [](RunConfig& c, const std::string& v) {
         parse_quantity(v);
         c.quantity = v;
       }},
      {"omega", [](RunConfig& c, const std::string& v) { c.omega = positive_double(v); }},
      {"length", [](RunConfig& c, const std::string& v) { c.length = positive_double(v); }},
      {"radius", [](RunConfig& c, const std::string& v) { c.radius = positive_double(v); }},
      {"h",
       [](RunConfig& c, const std::string& v) {
         c.h.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.h.push_back(positive_double(trim(item)));
         if (c.h.empty()) throw std::invalid_argument("empty h list");
       }},
      {"h_max", [](RunConfig& c, const std::string& v) { c.h_max = positive_double(v); }},
      {"h_min", [](RunConfig& c, const std::string& v) { c.h_min = positive_double(v); }},
      {"h_points", [](RunConfig& c, const std::string& v) { c.h_points = positive_int(v, 2); }},
      {"resolution",
       [](RunConfig& c, const std::string& v) {
         if (v == "adaptive") c.policy = ResolutionPolicy::adaptive;
         else if (v == "fixed") c.policy = ResolutionPolicy::fixed;
         else throw std::invalid_argument("resolution must be 'adaptive' or 'fixed', got '" + v + "'");
       }},
      {"theta_modes", [](RunConfig& c, const std::string& v) { c.resolution.M = positive_int(v, 2); }},
      {"z_modes", [](RunConfig& c, const std::string& v) { c.resolution.N = positive_int(v, 2); }},
      {"normal_z_degree", [](RunConfig& c, const std::string& v) { c.resolution.P = positive_int(v, 0); }},
      {"t_degree", [](RunConfig& c, const std::string& v) { c.resolution.D = positive_int(v, 1); }},
      {"drop_first", [](RunConfig& c, const std::string& v) { c.drop_first = positive_int(v, 0); }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         const auto x = to_integer(v);
         if (x < 0) throw std::invalid_argument("seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(x);
       }},
      {"out",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) throw std::invalid_argument("empty output directory");
         c.out = v;
       }},
      {"exact_volume_element", [](RunConfig& c, const std::string& v) { c.exact_volume_element = to_bool(v); }},
      {"branch",
       [](RunConfig& c, const std::string& v) {
         const auto x = to_integer(v);
         if (x != 1 && x != -1) throw std::invalid_argument("branch must be 1 or -1");
         c.branch = static_cast<int>(x);
       }},
      {"phase_wavenumber", [](RunConfig& c, const std::string& v) { c.phase_wavenumber = positive_double(v); }},
      {"export_matrices", [](RunConfig& c, const std::string& v) { c.export_matrices = to_bool(v); }},
      {"constrained", [](RunConfig& c, const std::string& v) { c.constrained = to_bool(v); }},
  };
  return table;
}

}  // namespace detail

/// Parses `key = value` lines; '#' starts a comment. Errors name the line.
inline RunConfig parse_config(std::istream& in, const std::string& source = "config") {
  RunConfig c;
  std::set<std::string> seen;
  bool resolution_explicit = false, overrides = false;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto fail = [&](const std::string& msg) {
      throw ConfigError(source + ":" + std::to_string(number) + ": " + msg);
    };
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + text + "'");
    const auto key = detail::trim(std::string_view(text).substr(0, eq));
    const auto value = detail::trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) fail("missing key before '='");
    const auto& table = detail::setters();
    const auto it = table.find(key);
    if (it == table.end()) fail("unknown key '" + key + "'");
    if (!seen.insert(key).second) fail("duplicate key '" + key + "'");
    try {
      it->second(c, value);
    } catch (const std::invalid_argument& e) {
      fail(key + ": " + e.what());
    }
    if (key == "resolution") resolution_explicit = true;
    if (key == "theta_modes" || key == "z_modes" || key == "normal_z_degree" || key == "t_degree") overrides = true;
  }
  if (overrides) {
    if (resolution_explicit && c.policy == ResolutionPolicy::adaptive) {
      throw ConfigError(source + ": resolution overrides need 'resolution = fixed'");
    }
    c.policy = ResolutionPolicy::fixed;
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

struct RunOptions {
  bool serial = false;
  int threads = 1;
};

// ---------------------------------------------------------------------------
// Output.

inline const char* kCsvHeader = "h,value,basis_dim,residual,wall_time_s";

/// One row per successful point, 17 significant digits, LF endings. Wall
/// times are written as 0 when `timings` is false.
inline void write_csv(std::ostream& os, const SweepResult& r, bool timings) {
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  os << kCsvHeader << '\n';
  for (const auto& rec : r.records) {
    if (!rec.ok) continue;
    os << rec.h << ',' << rec.value << ',' << rec.basis_dim << ',' << rec.residual << ','
       << (timings ? rec.wall_time_s : 0.0) << '\n';
  }
}

inline constexpr double kUniformKpBand = 2.0;

inline double fit_tolerance(SweepQuantity q) {
  return (q == SweepQuantity::ansatz_quotient_neg || q == SweepQuantity::ansatz_quotient_pos) ? 0.1 : 0.2;
}

inline nlohmann::ordered_json fit_summary(const SweepResult& r, int drop_first, bool timings) {
  nlohmann::ordered_json j;
  j["surface"] = r.surface;
  j["quantity"] = to_string(r.quantity);
  j["gaussian_sign"] = to_string(r.sign);
  j["points"] = r.records.size();
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& rec : r.records)
    if (!rec.ok) j["failures"].push_back({{"h", rec.h}, {"error", rec.error}});
  j["sweep_ok"] = r.ok();
  j["drop_first"] = drop_first;
  j["target_alpha"] = target_exponent(r.quantity, r.sign);
  try {
    const auto f = fit_exponent(r.samples(), drop_first);
    j["alpha"] = f.alpha;
    j["prefactor"] = f.prefactor;
    j["r2"] = f.r2;
    j["r2_flag"] = f.flagged();
    j["residuals"] = f.residuals;
  } catch (const std::invalid_argument& e) {
    j["alpha"] = nullptr;
    j["fit_note"] = e.what();
  }
  if (timings) {
    double total = 0.0;
    for (const auto& rec : r.records) total += rec.wall_time_s;
    j["wall_time_s_total"] = total;
  }
  return j;
}

inline std::string output_stem(const SweepResult& r) { return r.surface + "_" + to_string(r.quantity); }

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

// ---------------------------------------------------------------------------
// Commands.

inline int cmd_geom_check(const RunConfig& c, std::ostream& out, std::ostream& err) {
  constexpr double kResidualThreshold = 1e-7;
  const auto s = c.make_patch();
  const auto res = codazzi_gauss_residual(s, 32);
  const auto cert = bounds_certificate(s, 32);
  out << std::setprecision(6);
  out << "surface = " << s.name << '\n'
      << "codazzi_theta_residual = " << res.theta_relation << '\n'
      << "codazzi_z_residual = " << res.z_relation << '\n'
      << "gauss_residual = " << res.gauss_relation << '\n'
      << "a = " << cert.a << "\nA = " << cert.A << "\nB = " << cert.B << '\n'
      << "k = " << cert.k << "\nK = " << cert.K << "\nK1 = " << cert.K1 << '\n'
      << "gaussian_sign = " << to_string(cert.gaussian_sign) << '\n'
      << "admissible = " << (cert.admissible ? "true" : "false") << '\n';
  if (!cert.admissible) {
    err << cert.note << '\n';
    out << cert.note << '\n';
    return kFailure;
  }
  if (res.max() > kResidualThreshold) {
    err << "Codazzi-Gauss residual " << res.max() << " above " << kResidualThreshold << '\n';
    return kFailure;
  }
  out << "status = pass\n";
  return kPass;
}

namespace detail {

inline int run_and_write(const SweepPlan& plan, const RunConfig& c, const RunOptions& o, std::ostream& out,
                         std::ostream& err) {
  SweepResult r;
  try {
    r = run_sweep(plan);
  } catch (const std::invalid_argument& e) {
    err << e.what() << '\n';
    return kFailure;
  }
  const fs::path dir(c.out);
  const auto stem = output_stem(r);
  std::ostringstream csv;
  write_csv(csv, r, !o.serial);
  write_text(dir / (stem + ".csv"), csv.str());
  const auto summary = fit_summary(r, c.drop_first, !o.serial);
  write_text(dir / (stem + ".fit.json"), summary.dump(2) + "\n");

  out << std::setprecision(6);
  for (const auto& rec : r.records) {
    if (rec.ok) {
      out << "h = " << rec.h << "  value = " << rec.value << "  dim = " << rec.basis_dim
          << "  residual = " << rec.residual << "  time = " << rec.wall_time_s << " s\n";
    } else {
      out << "h = " << rec.h << "  FAILED: " << rec.error << '\n';
      err << "h = " << rec.h << ": " << rec.error << '\n';
    }
  }
  out << summary.dump(2) << '\n';
  if (!r.ok()) {
    err << "sweep failed: " << r.failures() << " of " << r.records.size() << " points failed\n";
    return kFailure;
  }
  return kPass;
}

inline SweepPlan base_plan(const RunConfig& c, const RunOptions& o, SweepQuantity q) {
  SweepPlan p;
  p.surface = c.make_patch();
  p.quantity = q;
  p.hs = c.grid();
  p.policy = c.policy;
  p.resolution = c.resolution;
  p.exact_volume_element = c.exact_volume_element;
  p.branch = c.branch;
  p.phase_wavenumber = c.phase_wavenumber;
  p.constrained = c.constrained;
  p.threads = o.serial ? 1 : std::max(1, o.threads);
  p.korn.eigen.seed = c.seed;
  return p;
}

inline void prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + c.out + "': " + ec.message());
}

}  // namespace detail

/// Sweeps the Ansatz matching the surface's curvature sign (or the one named
/// by `quantity`).
inline int cmd_ansatz_quotient(const RunConfig& c, const RunOptions& o, std::ostream& out, std::ostream& err) {
  const auto s = c.make_patch();
  SweepQuantity q;
  if (c.quantity) {
    q = parse_quantity(*c.quantity);
    if (q != SweepQuantity::ansatz_quotient_neg && q != SweepQuantity::ansatz_quotient_pos) {
      throw ConfigError("config: ansatz-quotient needs quantity ansatz-quotient-neg or ansatz-quotient-pos");
    }
  } else {
    const auto sign = bounds_certificate(s, 32).gaussian_sign;
    q = sign == GaussianSign::negative ? SweepQuantity::ansatz_quotient_neg : SweepQuantity::ansatz_quotient_pos;
  }
  const auto plan = detail::base_plan(c, o, q);
  detail::prepare_out(c);
  return detail::run_and_write(plan, c, o, out, err);
}

inline int cmd_korn_constant(const RunConfig& c, const RunOptions& o, std::ostream& out, std::ostream& err) {
  SweepQuantity q = SweepQuantity::korn_constant;
  if (c.quantity) {
    q = parse_quantity(*c.quantity);
    if (q != SweepQuantity::korn_constant && q != SweepQuantity::uniform_kp) {
      throw ConfigError("config: korn-constant needs quantity korn-constant or uniform-kp");
    }
  }
  auto plan = detail::base_plan(c, o, q);
  detail::prepare_out(c);
  if (c.export_matrices) {
    const fs::path dir(c.out);
    const std::string stem = plan.surface.name + "_" + to_string(q);
    const auto hs = plan.hs;
    plan.korn.on_assembled = [dir, stem, hs](const GramPair& p) {
      const auto i = std::find(hs.begin(), hs.end(), p.h) - hs.begin();
      for (bool strain : {true, false}) {
        std::ostringstream os;
        os.imbue(std::locale::classic());
        write_triplets(os, p, strain);
        write_text(dir / (stem + "_h" + std::to_string(i) + (strain ? "_E" : "_G") + ".txt"), os.str());
      }
    };
  }
  return detail::run_and_write(plan, c, o, out, err);
}

// ---------------------------------------------------------------------------
// Report.

struct ReportSeries {
  std::string path;
  std::string surface;
  SweepQuantity quantity = SweepQuantity::korn_constant;
  std::vector<std::pair<double, double>> samples;
  std::optional<ScalingFit> fit;
  std::string note;
  std::optional<int> drop_first;  // from the sweep's fit summary, if present
  double target = 0.0;
  bool pass = false;
};

/// Reads a sweep CSV. Surface and quantity come from the file name
/// `<surface>_<quantity>.csv`; drop_first from the `.fit.json` beside it.
inline ReportSeries read_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV '" + path + "'");
  ReportSeries s;
  s.path = path;
  const auto stem = fs::path(path).stem().string();
  const auto us = stem.find('_');
  if (us == std::string::npos) throw ConfigError("cannot infer surface and quantity from '" + path + "'");
  s.surface = stem.substr(0, us);
  try {
    s.quantity = parse_quantity(stem.substr(us + 1));
  } catch (const std::invalid_argument&) {
    throw ConfigError("cannot infer quantity from '" + path + "'");
  }
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1) {
      if (line != kCsvHeader) throw std::runtime_error(path + ": unexpected header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string h, v;
    std::getline(ss, h, ',');
    std::getline(ss, v, ',');
    try {
      s.samples.emplace_back(detail::to_double(h), detail::to_double(v));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  if (s.samples.empty()) throw std::runtime_error(path + ": empty CSV");
  auto sidecar = fs::path(path);
  sidecar.replace_extension(".fit.json");
  if (std::ifstream js(sidecar); js) {
    const auto j = nlohmann::json::parse(js, nullptr, false);
    if (!j.is_discarded() && j.contains("drop_first") && j["drop_first"].is_number_integer()) {
      s.drop_first = j["drop_first"].get<int>();
    }
  }
  return s;
}

inline std::string report_svg(const std::vector<ReportSeries>& series) {
  constexpr double W = 720, H = 480, L = 80, R = 220, T = 30, B = 60;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (const auto& [h, v] : s.samples) {
      if (!(h > 0.0) || !(v > 0.0)) continue;
      x0 = std::min(x0, std::log10(h));
      x1 = std::max(x1, std::log10(h));
      y0 = std::min(y0, std::log10(v));
      y1 = std::max(y1, std::log10(v));
    }
  x0 = std::floor(x0);
  x1 = std::ceil(x1);
  y0 = std::floor(y0);
  y1 = std::ceil(y1);
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pw = W - L - R, ph = H - T - B;
  auto X = [&](double h) { return L + pw * (std::log10(h) - x0) / (x1 - x0); };
  auto Y = [&](double v) { return T + ph * (1.0 - (std::log10(v) - y0) / (y1 - y0)); };
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return std::string(buf);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(x0); e <= static_cast<int>(x1); ++e) {
    const double x = X(std::pow(10.0, e));
    o << "<line x1=\"" << num(x) << "\" y1=\"" << T + ph << "\" x2=\"" << num(x) << "\" y2=\"" << T
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << num(x) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
    const double y = Y(std::pow(10.0, e));
    o << "<line x1=\"" << L << "\" y1=\"" << num(y) << "\" x2=\"" << L + pw << "\" y2=\"" << num(y)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">thickness h (log scale)</text>\n";
  o << "<text transform=\"translate(20 " << T + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\">value (log scale)</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* col = colors[i % 6];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
    for (const auto& [h, v] : s.samples) o << num(X(h)) << ',' << num(Y(v)) << ' ';
    o << "\"/>\n";
    for (const auto& [h, v] : s.samples)
      o << "<circle cx=\"" << num(X(h)) << "\" cy=\"" << num(Y(v)) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    if (s.fit) {
      const double ha = s.fit->samples.front().first, hb = s.fit->samples.back().first;
      const auto law = [&](double h) { return s.fit->prefactor * std::pow(h, s.fit->alpha); };
      o << "<line x1=\"" << num(X(ha)) << "\" y1=\"" << num(Y(law(ha))) << "\" x2=\"" << num(X(hb)) << "\" y2=\""
        << num(Y(law(hb))) << "\" stroke=\"" << col << "\" stroke-dasharray=\"5,4\"/>\n";
    }
    const double ly = T + 16 + 18 * i;
    o << "<rect x=\"" << W - R + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << col
      << "\"/>\n";
    o << "<text x=\"" << W - R + 28 << "\" y=\"" << ly << "\">" << s.surface << ' ' << to_string(s.quantity);
    if (s.fit) o << " a=" << num(s.fit->alpha);
    o << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Merges sweep CSVs into a table (surface, quantity, alpha, target, pass)
/// and a log-log plot `report.svg` in the output directory.
inline int cmd_report(const RunConfig& c, const std::vector<std::string>& csvs, std::ostream& out,
                      std::ostream& err) {
  if (csvs.empty()) throw ConfigError("report needs at least one CSV file");
  for (const auto& p : csvs)
    if (!fs::exists(p)) throw ConfigError("missing CSV '" + p + "'");
  std::vector<ReportSeries> series;
  for (const auto& p : csvs) {
    try {
      series.push_back(read_series(p));
    } catch (const std::runtime_error& e) {
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      err << e.what() << '\n';
      return kFailure;
    }
  }
  bool all = true;
  out << std::left << std::setw(10) << "surface" << std::setw(22) << "quantity" << std::setw(10) << "alpha"
      << std::setw(10) << "target" << std::setw(8) << "r2" << "result\n";
  for (auto& s : series) {
    GaussianSign sign = GaussianSign::indefinite;
    try {
      sign = bounds_certificate(make_surface({s.surface}), 32).gaussian_sign;
    } catch (const std::invalid_argument&) {
    }
    s.target = target_exponent(s.quantity, sign);
    try {
      s.fit = fit_exponent(s.samples, s.drop_first.value_or(c.drop_first));
      s.pass = std::abs(s.fit->alpha - s.target) <= fit_tolerance(s.quantity);
    } catch (const std::invalid_argument& e) {
      s.note = e.what();
      s.pass = false;
    }
    if (s.quantity == SweepQuantity::uniform_kp) {
      // Judged by the spread of the values, not by a fitted exponent.
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (const auto& [h, v] : s.samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      std::ostringstream band;
      band << "band " << std::setprecision(4) << hi / lo << " (<= " << kUniformKpBand << ")";
      s.note = band.str();
      s.pass = hi / lo <= kUniformKpBand;
    }
    all = all && s.pass;
    std::ostringstream a, t, r2;
    a << std::fixed << std::setprecision(4);
    t << std::fixed << std::setprecision(4) << s.target;
    r2 << std::fixed << std::setprecision(4);
    if (s.fit) {
      a << s.fit->alpha;
      r2 << s.fit->r2;
    } else {
      a << "n/a";
      r2 << "n/a";
    }
    out << std::setw(10) << s.surface << std::setw(22) << to_string(s.quantity) << std::setw(10) << a.str()
        << std::setw(10) << t.str() << std::setw(8) << r2.str() << (s.pass ? "pass" : "FAIL");
    if (!s.note.empty()) out << " (" << s.note << ")";
    if (s.fit && s.fit->flagged()) out << " (r2 below " << ScalingFit::kFlagR2 << ")";
    out << '\n';
  }
  detail::prepare_out(c);
  const auto svg = fs::path(c.out) / "report.svg";
  write_text(svg, report_svg(series));
  out << "plot: " << svg.string() << '\n';
  return all ? kPass : kFailure;
}

}  // namespace shellkorn::cli
