// End-to-end checks of the command-line surface: exit codes, artifacts,
// reproducibility. Spawns the built binary.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hydrostat/config.hpp"
#include "hydrostat/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace hydrostat;

namespace {

fs::path tmp_root() {
    fs::path p = fs::temp_directory_path() / "hydrostat_cli_test";
    fs::create_directories(p);
    return p;
}

int cli(const std::string& args, std::string* out = nullptr) {
    fs::path log = tmp_root() / "cli.log";
    std::string cmd =
        std::string(HYDROSTAT_BINARY_PATH) + " " + args + " > " + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    if (out) {
        std::ifstream in(log);
        std::ostringstream ss;
        ss << in.rdbuf();
        *out = ss.str();
    }
    return status == -1 ? -1 : WEXITSTATUS(status);
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

} // namespace

TEST_CASE("config errors exit 1") {
    fs::path cfg = tmp_root() / "bad.ini";
    write_file(cfg, "[grid]\nnx = 7\n"); // not a power of two
    CHECK(cli("simulate " + cfg.string()) == 1);

    write_file(cfg, "[grid]\nnonsense = 1\n");
    CHECK(cli("simulate " + cfg.string()) == 1);

    CHECK(cli("simulate /nonexistent/path.ini") == 1);
    CHECK(cli("verify bogus-suite") == 1);
}

TEST_CASE("parabolicity gate: exit 2, override runs") {
    fs::path cfg = tmp_root() / "gate.ini";
    fs::path out = tmp_root() / "gate_out";
    write_file(cfg,
               "[grid]\nnx = 8\nny = 8\nnz = 5\nh = 1.0\n"
               "[time]\ndt = 1e-3\nn_steps = 2\n"
               "[noise]\nkind = constant\ncphi = 1.4142135623730951, 0, 0\ncpsi = 0,0,0\n"
               "[physics]\nforcing = zero\nkappa = 0\n"
               "[output]\ndir = " + out.string() + "\n");
    CHECK(cli("simulate " + cfg.string()) == 2);
    CHECK(cli("check-noise " + cfg.string()) == 2);
    // nu = 2 exactly: marginal but stable enough for two tiny steps
    CHECK(cli("--allow-nonparabolic simulate " + cfg.string()) == 0);
    CHECK(fs::exists(out / "traj_0000.csv"));
}

TEST_CASE("blow-up exits 3 and still writes artifacts") {
    fs::path cfg = tmp_root() / "blowup.ini";
    fs::path out = tmp_root() / "blowup_out";
    write_file(cfg,
               "[grid]\nnx = 16\nny = 16\nnz = 5\nh = 1.0\n"
               "[time]\ndt = 1e-3\nn_steps = 8000\ndiag_cadence = 40\n"
               "[noise]\nkind = constant\ncphi = 0,0,0\ncpsi = 1.5811388300841898, 0, 0\n"
               "[physics]\nforcing = zero\nkappa = 0\n"
               "[output]\ndir = " + out.string() + "\n");
    std::string log;
    CHECK(cli("--allow-nonparabolic simulate " + cfg.string(), &log) == 3);
    REQUIRE(fs::exists(out / "traj_0000.csv"));
    // final CSV row carries the blow-up flag
    std::ifstream in(out / "traj_0000.csv");
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    CHECK(last.back() == '1');
}

TEST_CASE("check-noise passes an admissible config") {
    fs::path cfg = tmp_root() / "ok.ini";
    write_file(cfg, "[noise]\nkind = kraichnan\nN = 2\nsigma = 0.05\nseed = 5\n");
    std::string log;
    CHECK(cli("check-noise " + cfg.string(), &log) == 0);
    CHECK(log.find("nu_phi=") != std::string::npos);
    CHECK(log.find("pass=yes") != std::string::npos);
}

TEST_CASE("verify subcommand: fast suites pass, report is machine readable") {
    std::string log;
    CHECK(cli("verify projection", &log) == 0);
    CHECK(log.find("[PASS] projection.idempotency") != std::string::npos);
    CHECK(log.find("value=") != std::string::npos);

    CHECK(cli("verify kadlec", &log) == 0);
    CHECK(log.find("[PASS] kadlec.beta0_relative_residual") != std::string::npos);

    CHECK(cli("verify cancellation --grids 8x8x9 16x16x17", &log) == 0);
    CHECK(log.find("[PASS] cancellation.v_order") != std::string::npos);
}

TEST_CASE("--seed overrides the ensemble base seed") {
    fs::path cfg = tmp_root() / "seed.ini";
    fs::path out1 = tmp_root() / "seed_a", out2 = tmp_root() / "seed_b",
             out3 = tmp_root() / "seed_c";
    auto body = [&](const fs::path& dir) {
        return std::string("[grid]\nnx = 8\nny = 8\nnz = 5\nh = 1.0\n"
                           "[time]\ndt = 1e-3\nn_steps = 5\n"
                           "[noise]\nkind = kraichnan\nN = 2\nsigma = 0.05\nseed = 3\n"
                           "[ensemble]\nbase_seed = 7\n"
                           "[output]\ndir = ") + dir.string() + "\n";
    };
    write_file(cfg, body(out1));
    CHECK(cli("simulate " + cfg.string()) == 0);
    write_file(cfg, body(out2));
    CHECK(cli("--seed 7 simulate " + cfg.string()) == 0);
    write_file(cfg, body(out3));
    CHECK(cli("--seed 99 simulate " + cfg.string()) == 0);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    // same seed: identical; different seed: different trajectories
    CHECK(slurp(out1 / "traj_0000.csv") == slurp(out2 / "traj_0000.csv"));
    CHECK(slurp(out1 / "traj_0000.csv") != slurp(out3 / "traj_0000.csv"));
}

TEST_CASE("zero-noise ensemble trajectories are identical") {
    fs::path cfg = tmp_root() / "zero.ini";
    fs::path out = tmp_root() / "zero_out";
    write_file(cfg, "[grid]\nnx = 8\nny = 8\nnz = 5\nh = 1.0\n"
                    "[time]\ndt = 1e-3\nn_steps = 10\n"
                    "[noise]\nkind = zero\n"
                    "[ensemble]\nn_traj = 3\n"
                    "[output]\ndir = " + out.string() + "\n");
    CHECK(cli("simulate " + cfg.string()) == 0);
    auto slurp_tail = [](const fs::path& p) {
        // drop the per-file trajectory column: compare from the second comma
        std::ifstream in(p);
        std::ostringstream ss;
        std::string line;
        while (std::getline(in, line)) {
            auto c = line.find(',');
            ss << (c == std::string::npos ? line : line.substr(c)) << '\n';
        }
        return ss.str();
    };
    std::string a = slurp_tail(out / "traj_0000.csv");
    CHECK(a == slurp_tail(out / "traj_0001.csv"));
    CHECK(a == slurp_tail(out / "traj_0002.csv"));
}

TEST_CASE("basis supplied from a file reproduces the generated basis") {
    Grid g = make_grid(8, 8, 5, 1.0);
    KraichnanOptions opt;
    opt.n_modes = 2;
    opt.seed = 3;
    opt.amplitude = 0.05;
    NoiseBasis b = make_kraichnan_basis(g, opt);
    fs::path bfile = tmp_root() / "basis.bin";
    write_basis_file(bfile.string(), b);

    fs::path cfg1 = tmp_root() / "gen.ini";
    fs::path cfg2 = tmp_root() / "file.ini";
    fs::path out1 = tmp_root() / "basis_gen", out2 = tmp_root() / "basis_file";
    write_file(cfg1, "[grid]\nnx = 8\nny = 8\nnz = 5\nh = 1.0\n"
                     "[time]\ndt = 1e-3\nn_steps = 5\n"
                     "[noise]\nkind = kraichnan\nN = 2\nsigma = 0.05\nseed = 3\n"
                     "[output]\ndir = " + out1.string() + "\n");
    write_file(cfg2, "[grid]\nnx = 8\nny = 8\nnz = 5\nh = 1.0\n"
                     "[time]\ndt = 1e-3\nn_steps = 5\n"
                     "[noise]\nkind = file\nfile = " + bfile.string() + "\n"
                     "[output]\ndir = " + out2.string() + "\n");
    CHECK(cli("simulate " + cfg1.string()) == 0);
    CHECK(cli("simulate " + cfg2.string()) == 0);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(out1 / "traj_0000.csv") == slurp(out2 / "traj_0000.csv"));
}
