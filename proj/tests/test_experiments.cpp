#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "odegrad/experiments.hpp"

using namespace odegrad;
namespace ex = odegrad::experiments;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& leaf) {
    auto p = fs::temp_directory_path() / "odegrad_exp_tests" / leaf;
    fs::create_directories(p);
    return p.string();
}

std::vector<std::string> data_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

std::string strip_last_column(const std::string& line) {
    const auto pos = line.rfind(',');
    return line.substr(0, pos);
}

} // namespace

TEST_CASE("toy gradient experiment: grid size and reproducibility") {
    ex::ToyGradientConfig cfg;
    cfg.t_max = 4;
    auto out1 = ex::run_toy_gradient(cfg, scratch("toy_a"));
    auto out2 = ex::run_toy_gradient(cfg, scratch("toy_b"));

    // 3 methods x 4 horizons data rows plus one header
    auto rows1 = data_lines(out1.files[0]);
    CHECK(rows1.size() == 3 * 4 + 1);

    // detail files reproduce bitwise; summaries reproduce except wall time
    auto rows2 = data_lines(out2.files[0]);
    REQUIRE(rows1.size() == rows2.size());
    for (std::size_t i = 0; i < rows1.size(); ++i) CHECK(rows1[i] == rows2[i]);
    auto sum1 = data_lines(out1.files[1]);
    auto sum2 = data_lines(out2.files[1]);
    REQUIRE(sum1.size() == sum2.size());
    for (std::size_t i = 0; i < sum1.size(); ++i)
        CHECK(strip_last_column(sum1[i]) == strip_last_column(sum2[i]));

    // analytic column at T=1 is 2 e^2
    bool found = false;
    for (const auto& line : rows1) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells[1] == "aca" && cells[5] == "1") {
            CHECK(std::stod(cells[6]) == doctest::Approx(14.7781121978613).epsilon(1e-12));
            found = true;
        }
    }
    CHECK(found);

    for (const auto& f : out1.files) CHECK(ex::validate_csv(f).pass);
}

TEST_CASE("vdp experiment: header, replay column and checks") {
    ex::VdpReverseConfig cfg;
    auto out = ex::run_vdp_reverse(cfg, scratch("vdp"));
    CHECK(out.pass);

    std::ifstream in(out.files[0]);
    std::string first;
    std::getline(in, first);
    CHECK(first.find("y1_0=2") != std::string::npos);
    CHECK(first.find("y2_0=0") != std::string::npos);

    // replay series duplicates the forward checkpoints exactly
    auto rows = data_lines(out.files[0]);
    std::vector<std::string> fwd, replay;
    for (const auto& line : rows) {
        if (line.find(",forward,") != std::string::npos) fwd.push_back(line.substr(line.find(",forward,") + 9));
        if (line.find(",replay,") != std::string::npos) replay.push_back(line.substr(line.find(",replay,") + 8));
    }
    REQUIRE(!fwd.empty());
    REQUIRE(fwd.size() == replay.size());
    for (std::size_t i = 0; i < fwd.size(); ++i) CHECK(fwd[i] == replay[i]);

    for (const auto& f : out.files) CHECK(ex::validate_csv(f).pass);
}

TEST_CASE("convergence experiment emits per-step errors and slopes") {
    ex::ConvergenceConfig cfg;
    auto out = ex::run_convergence(cfg, scratch("conv"));
    CHECK(out.pass);
    auto rows = data_lines(out.files[0]);
    CHECK(rows.size() == 1 + 3 * 6 + 5); // header + 3 tableaux x 6 steps + dopri5 x 5
    auto summary = data_lines(out.files[1]);
    CHECK(summary.size() == 1 + 4); // one slope row per tableau
    for (const auto& f : out.files) CHECK(ex::validate_csv(f).pass);
}

TEST_CASE("gradcheck experiment passes at reduced probe count") {
    ex::GradcheckConfig cfg;
    cfg.probes = 10;
    cfg.fc_hidden = 8;
    auto out = ex::run_gradcheck(cfg, scratch("gc"));
    CHECK(out.pass);
    auto rows = data_lines(out.files[0]);
    // 3 problems x 3 methods x 10 probes x 2 blocks + header
    CHECK(rows.size() == 1 + 3 * 3 * 10 * 2);
    for (const auto& f : out.files) CHECK(ex::validate_csv(f).pass);
}

TEST_CASE("three-body experiment emits one report per method") {
    ex::ThreeBodyConfig cfg;
    cfg.dataset_path = std::string(ODEGRAD_DATA_DIR) + "/three_body_reference.txt";
    cfg.methods = {Method::Aca, Method::Adjoint, Method::Naive};
    auto out = ex::run_three_body(cfg, scratch("tb"));
    CHECK(out.pass);

    auto summary = data_lines(out.files[1]);
    int test_mse_rows = 0;
    for (const auto& line : summary)
        if (line.find(",test_mse,") != std::string::npos) ++test_mse_rows;
    CHECK(test_mse_rows == 3);
    for (const auto& f : out.files) CHECK(ex::validate_csv(f).pass);
}

TEST_CASE("validate_csv flags tampering") {
    ex::ToyGradientConfig cfg;
    cfg.t_max = 2;
    auto out = ex::run_toy_gradient(cfg, scratch("tamper"));
    REQUIRE(ex::validate_csv(out.files[0]).pass);
    {
        std::ofstream app(out.files[0], std::ios::app);
        app << "bogus,row\n";
    }
    CHECK_FALSE(ex::validate_csv(out.files[0]).pass);
    CHECK_FALSE(ex::validate_csv("/nonexistent/file.csv").pass);
}
