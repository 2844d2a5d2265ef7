#include "shellkorn/cli.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace shellkorn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("shell_korn_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

Outcome run(const std::string& args) {
  const auto o = scratch() / "stdout.txt", e = scratch() / "stderr.txt";
  const std::string cmd = std::string(SHELL_KORN_BINARY) + " " + args + " > " + o.string() + " 2> " + e.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

std::vector<std::vector<double>> read_rows(const fs::path& csv) {
  std::ifstream f(csv);
  std::string line;
  std::getline(f, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

cli::RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return cli::parse_config(in);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing.

TEST(Config, defaults_and_comments) {
  const auto c = parse("# a comment\n\nsurface = catenoid   # trailing\nquantity = korn-constant\n");
  EXPECT_EQ(*c.surface, "catenoid");
  EXPECT_EQ(*c.quantity, "korn-constant");
  EXPECT_EQ(c.grid(), geometric_grid());
  EXPECT_EQ(c.policy, ResolutionPolicy::adaptive);
  EXPECT_EQ(c.drop_first, 1);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_FALSE(c.export_matrices);
  EXPECT_EQ(c.make_patch().length, 0.5);
  EXPECT_EQ(parse("surface = sphere\n").make_patch().length, 0.2);
}

TEST(Config, all_keys_parse) {
  const auto c = parse(
      "surface = sphere\nquantity = uniform-kp\nomega = 3\nlength = 0.3\nradius = 2\nh = 0.1, 0.05,0.02\n"
      "theta_modes = 10\nz_modes = 9\nnormal_z_degree = 5\nt_degree = 3\ndrop_first = 0\nseed = 42\n"
      "out = dir\nexact_volume_element = true\nbranch = -1\nphase_wavenumber = 3\nexport_matrices = yes\n"
      "constrained = false\n");
  EXPECT_EQ(c.h, (std::vector<double>{0.1, 0.05, 0.02}));
  EXPECT_EQ(c.policy, ResolutionPolicy::fixed);
  EXPECT_EQ(c.resolution.M, 10);
  EXPECT_EQ(c.resolution.N, 9);
  EXPECT_EQ(c.resolution.P, 5);
  EXPECT_EQ(c.resolution.D, 3);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.branch, -1);
  EXPECT_TRUE(c.exact_volume_element);
  EXPECT_TRUE(c.export_matrices);
  EXPECT_FALSE(c.constrained);
  const auto s = c.make_patch();
  EXPECT_EQ(s.omega, 3.0);
  EXPECT_EQ(s.length, 0.3);
  EXPECT_FALSE(s.periodic);
  const auto g = parse("surface = sphere\nh_max = 0.2\nh_min = 0.02\nh_points = 3\n").grid();
  EXPECT_NEAR(g[1], std::sqrt(0.2 * 0.02), 1e-15);
}

TEST(Config, errors_name_the_line) {
  auto message = [](const std::string& text) {
    try {
      parse(text);
    } catch (const cli::ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("surface = sphere\nh == 0.1\n").find("config:2:"), std::string::npos);
  EXPECT_NE(message("surface = sphere\n\nbogus = 1\n").find("config:3: unknown key 'bogus'"), std::string::npos);
  EXPECT_NE(message("just text\n").find("config:1:"), std::string::npos);
  EXPECT_NE(message("= 3\n").find("missing key"), std::string::npos);
  EXPECT_NE(message("seed = 1\nseed = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(message("quantity = korn\n").find("unknown quantity"), std::string::npos);
  EXPECT_NE(message("branch = 2\n").find("config:1:"), std::string::npos);
  EXPECT_NE(message("theta_modes = 1\n").find("out of range"), std::string::npos);
  EXPECT_NE(message("t_degree = 0\n").find("out of range"), std::string::npos);
  EXPECT_NE(message("export_matrices = maybe\n").find("true or false"), std::string::npos);
  EXPECT_NE(message("resolution = adaptive\ntheta_modes = 12\n").find("resolution = fixed"), std::string::npos);
  EXPECT_THROW(parse("quantity = korn-constant\n").make_patch(), cli::ConfigError);
  EXPECT_THROW(parse("surface = torus\n").make_patch(), cli::ConfigError);
  EXPECT_THROW(parse("h_max = 0.01\nh_min = 0.1\n").grid(), cli::ConfigError);
}

TEST(Csv, dialect) {
  SweepResult r;
  r.surface = "sphere";
  r.records = {{0.1, 1.0 / 3.0, 12, 1e-17, 2.5, true, ""}, {0.05, 0.0, 0, 0.0, 1.0, false, "boom"}};
  std::ostringstream os;
  cli::write_csv(os, r, false);
  EXPECT_EQ(os.str(), "h,value,basis_dim,residual,wall_time_s\n0.10000000000000001,0.33333333333333331,12,1.0000000000000001e-17,0\n");
  std::ostringstream timed;
  cli::write_csv(timed, r, true);
  EXPECT_NE(timed.str().find(",2.5\n"), std::string::npos);
  const auto j = cli::fit_summary(r, 1, false);
  EXPECT_EQ(j["failures"].size(), 1u);
  EXPECT_TRUE(j["alpha"].is_null());
}

// ---------------------------------------------------------------------------
// Executable.

TEST(Binary, geom_check_exit_codes) {
  auto r = run("geom-check --config " + write_config("sphere.cfg", "surface = sphere\n").string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("gaussian_sign = positive"), std::string::npos);
  r = run("geom-check --config " + write_config("cat.cfg", "surface = catenoid\n").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("gaussian_sign = negative"), std::string::npos);
  r = run("geom-check --config " + write_config("cyl.cfg", "surface = cylinder\n").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("inadmissible: curvature vanishes"), std::string::npos);
  const auto bad = write_config("bad.cfg", "surface = sphere\nh == 0.1\n");
  r = run("geom-check --config " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(bad.string() + ":2:"), std::string::npos);
}

TEST(Binary, usage_errors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("geom-check").code, 2);
  EXPECT_EQ(run("geom-check --config /nonexistent/x.cfg").code, 2);
  EXPECT_EQ(run("frobnicate --config x").code, 2);
  EXPECT_EQ(run("geom-check --help").code, 0);
}

class Sweeps : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto out = scratch() / "ansatz";
    neg = run("ansatz-quotient --serial --config " + write_config("neg.cfg", "surface = catenoid\n").string() +
              " --out " + out.string());
    pos = run("ansatz-quotient --serial --config " + write_config("pos.cfg", "surface = sphere\n").string() +
              " --out " + out.string());
  }
  static inline Outcome neg, pos;
};

TEST_F(Sweeps, negative_ansatz_csv_and_fit) {
  ASSERT_EQ(neg.code, 0) << neg.err;
  const auto csv = scratch() / "ansatz" / "catenoid_ansatz-quotient-neg.csv";
  const auto rows = read_rows(csv);
  ASSERT_EQ(rows.size(), 7u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i][1], rows[i - 1][1]);
  for (const auto& row : rows) EXPECT_EQ(row[4], 0.0);
  const auto j = nlohmann::json::parse(slurp(scratch() / "ansatz" / "catenoid_ansatz-quotient-neg.fit.json"));
  EXPECT_NEAR(j["alpha"].get<double>(), 4.0 / 3.0, 0.1);
  EXPECT_NE(neg.out.find("\"alpha\""), std::string::npos);
  const auto text = slurp(csv);
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST_F(Sweeps, positive_ansatz_alpha_near_one) {
  ASSERT_EQ(pos.code, 0) << pos.err;
  const auto j = nlohmann::json::parse(slurp(scratch() / "ansatz" / "sphere_ansatz-quotient-pos.fit.json"));
  EXPECT_NEAR(j["alpha"].get<double>(), 1.0, 0.1);
}

TEST_F(Sweeps, report_table_and_plot) {
  const auto dir = scratch() / "ansatz";
  const auto cfg = write_config("report.cfg", "out = " + (scratch() / "report").string() + "\n");
  auto r = run("report --config " + cfg.string() + " " + (dir / "catenoid_ansatz-quotient-neg.csv").string() + " " +
               (dir / "sphere_ansatz-quotient-pos.csv").string());
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("1.3333"), std::string::npos);
  EXPECT_NE(r.out.find("1.0000"), std::string::npos);
  std::istringstream lines(r.out);
  std::string line;
  int passes = 0;
  while (std::getline(lines, line)) passes += line.find(" pass") != std::string::npos;
  EXPECT_EQ(passes, 2);
  const auto svg = slurp(scratch() / "report" / "report.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("thickness h (log scale)"), std::string::npos);
  EXPECT_NE(svg.find("value (log scale)"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);

  r = run("report --config " + cfg.string() + " " + (dir / "sphere_ansatz-quotient-pos.csv").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);  // header, one row, plot path

  const auto empty = scratch() / "sphere_korn-constant.csv";
  std::ofstream(empty) << "h,value,basis_dim,residual,wall_time_s\n";
  EXPECT_EQ(run("report --config " + cfg.string() + " " + empty.string()).code, 1);
  const auto blank = scratch() / "catenoid_korn-constant.csv";
  std::ofstream(blank).flush();
  EXPECT_EQ(run("report --config " + cfg.string() + " " + blank.string()).code, 1);
  EXPECT_EQ(run("report --config " + cfg.string() + " " + (scratch() / "nope_korn-constant.csv").string()).code, 2);
}

TEST(Binary, sign_mismatch_exits_one) {
  const auto cfg = write_config("mismatch.cfg", "surface = sphere\nquantity = ansatz-quotient-neg\nout = " +
                                                    (scratch() / "mismatch").string() + "\n");
  const auto r = run("ansatz-quotient --config " + cfg.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("sign mismatch"), std::string::npos);
  const auto wrong = write_config("wrongq.cfg", "surface = sphere\nquantity = korn-constant\n");
  EXPECT_EQ(run("ansatz-quotient --config " + wrong.string()).code, 2);
}

TEST(Binary, korn_constant_single_point_with_export) {
  const auto out = scratch() / "korn1";
  const auto cfg = write_config("korn1.cfg", "surface = sphere\nquantity = korn-constant\nh = 0.05\n"
                                             "theta_modes = 6\nz_modes = 6\nnormal_z_degree = 4\nt_degree = 2\n"
                                             "export_matrices = true\nout = " + out.string() + "\n");
  const auto r = run("korn-constant --serial --config " + cfg.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_rows(out / "sphere_korn-constant.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_GT(rows[0][1], 0.0);
  EXPECT_LE(rows[0][1], 1.0);
  const std::size_t dim = static_cast<std::size_t>(rows[0][2]);

  // Exported pair reproduces the reported minimum through a dense solve.
  auto load = [&](const fs::path& p) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    std::ifstream f(p);
    int i, j;
    double v;
    while (f >> i >> j >> v) A(i, j) = v;
    return A;
  };
  const auto E = load(out / "sphere_korn-constant_h0_E.txt");
  const auto G = load(out / "sphere_korn-constant_h0_G.txt");
  EXPECT_EQ((E - E.transpose()).cwiseAbs().maxCoeff(), 0.0);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(E, G, Eigen::EigenvaluesOnly);
  EXPECT_NEAR(es.eigenvalues().minCoeff(), rows[0][1], 1e-9 * rows[0][1]);
}

TEST(Binary, korn_constant_sweep_decreases_and_is_byte_stable) {
  const std::string body = "surface = catenoid\nh_max = 0.1\nh_min = 0.01\nh_points = 4\n"
                           "theta_modes = 8\nz_modes = 8\nnormal_z_degree = 6\nt_degree = 2\n";
  const auto a = scratch() / "stable_a", b = scratch() / "stable_b";
  const auto cfg = write_config("stable.cfg", body);
  ASSERT_EQ(run("korn-constant --serial --seed 7 --config " + cfg.string() + " --out " + a.string()).code, 0);
  ASSERT_EQ(run("korn-constant --serial --seed 7 --config " + cfg.string() + " --out " + b.string()).code, 0);
  const auto csv_a = slurp(a / "catenoid_korn-constant.csv");
  EXPECT_EQ(csv_a, slurp(b / "catenoid_korn-constant.csv"));
  const auto rows = read_rows(a / "catenoid_korn-constant.csv");
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i][1], rows[i - 1][1]);
  // Threaded runs give the same values.
  const auto c = scratch() / "stable_c";
  ASSERT_EQ(::setenv("SHELL_KORN_THREADS", "3", 1), 0);
  ASSERT_EQ(run("korn-constant --seed 7 --config " + cfg.string() + " --out " + c.string()).code, 0);
  ::unsetenv("SHELL_KORN_THREADS");
  const auto threaded = read_rows(c / "catenoid_korn-constant.csv");
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(threaded[i][1], rows[i][1]);
}

TEST(Binary, report_uses_band_for_uniform_kp_and_sidecar_drop) {
  const auto dir = scratch() / "synthetic";
  fs::create_directories(dir);
  const auto cfg = write_config("synthetic.cfg", "out = " + (dir / "out").string() + "\n");
  auto csv = [&](const std::string& name, const std::vector<std::pair<double, double>>& rows) {
    std::ofstream f(dir / name, std::ios::binary);
    f << "h,value,basis_dim,residual,wall_time_s\n";
    for (const auto& [h, v] : rows) f << h << ',' << v << ",10,0,0\n";
    return (dir / name).string();
  };
  const auto narrow = csv("catenoid_uniform-kp.csv", {{0.1, 0.5}, {0.05, 0.45}, {0.025, 0.4}});
  auto r = run("report --config " + cfg.string() + " " + narrow);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("band 1.25"), std::string::npos);
  const auto wide = csv("sphere_uniform-kp.csv", {{0.1, 0.5}, {0.05, 0.2}, {0.025, 0.1}});
  EXPECT_EQ(run("report --config " + cfg.string() + " " + wide).code, 1);

  // Three points with drop_first = 1 leaves too few; a sidecar asking for 0 fixes it.
  const auto three = csv("sphere_korn-constant.csv", {{0.1, 0.1}, {0.01, 0.01}, {0.001, 0.001}});
  r = run("report --config " + cfg.string() + " " + three);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("n/a"), std::string::npos);
  std::ofstream(dir / "sphere_korn-constant.fit.json") << "{\"drop_first\": 0}\n";
  r = run("report --config " + cfg.string() + " " + three);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("1.0000    1.0000"), std::string::npos);
}
