#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <singcov/matrix_io.hpp>

using namespace singcov;

namespace {

namespace fs = std::filesystem;

struct CliRun {
    int exit_code = -1;
    std::string stdout_text;
};

CliRun run_cli(const std::string& args) {
    const std::string out = (fs::temp_directory_path() / "singcov_cli_out.txt").string();
    const std::string cmd = std::string(SINGCOV_CLI_PATH) + " " + args + " > " + out + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun run;
    run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    run.stdout_text = read_text_file(out);
    fs::remove(out);
    return run;
}

std::string write_test_matrix(const std::string& name, const ComplexMatrix& m) {
    const std::string path = (fs::temp_directory_path() / name).string();
    save_matrix_json(path, m);
    return path;
}

}  // namespace

TEST_CASE("cli estimate writes diagnostics and respects exit codes") {
    ComplexMatrix k = ComplexMatrix::Zero(4, 4);
    k(0, 0) = 2.0;
    k(1, 1) = 1.0;
    const std::string in = write_test_matrix("singcov_cli_k.json", k);
    const std::string out = (fs::temp_directory_path() / "singcov_cli_est.json").string();

    const CliRun ok = run_cli("estimate --input " + in + " --L 1 --out " + out);
    CHECK(ok.exit_code == 0);
    const nlohmann::json j = nlohmann::json::parse(read_text_file(out));
    const ComplexMatrix est = matrix_from_json(j);
    CHECK(est.rows() == 4);
    CHECK(j.at("diagnostics").at("mu").get<double>() ==
          Catch::Approx(std::log(2.0)).epsilon(1e-10));
    CHECK(j.at("diagnostics").at("method").get<std::string>() == "exact");

    // L above the rank: validation error, message names L and rank
    const CliRun bad = run_cli("estimate --input " + in + " --L 3");
    CHECK(bad.exit_code == 1);
    CHECK(bad.stdout_text.find("L=3") != std::string::npos);
    CHECK(bad.stdout_text.find("rank 2") != std::string::npos);

    // L = rank < M with the exact method: degeneracy exit code
    const CliRun degen = run_cli("estimate --input " + in + " --L 2 --method exact");
    CHECK(degen.exit_code == 2);
    CHECK(degen.stdout_text.find("choose L < rank") != std::string::npos);

    // missing file: io error
    const CliRun noio = run_cli("estimate --input /nonexistent/k.json --L 1");
    CHECK(noio.exit_code == 3);

    fs::remove(in);
    fs::remove(out);
}

TEST_CASE("cli estimate accepts csv input") {
    const std::string path = (fs::temp_directory_path() / "singcov_cli_k.csv").string();
    singcov::detail::atomic_write_text(path, "2,0\n0,1\n");
    const CliRun ok = run_cli("estimate --input " + path + " --L 1");
    CHECK(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("rank=2") != std::string::npos);
    fs::remove(path);
}

TEST_CASE("cli capon prints the three power estimates") {
    RngStream rng(131, 0);
    ComplexMatrix g(5, 8);
    for (Index j = 0; j < 8; ++j)
        for (Index i = 0; i < 5; ++i) g(i, j) = rng.cnormal();
    const ComplexMatrix k = (g * g.adjoint()) / 8.0;
    ComplexMatrix a = ComplexMatrix::Zero(5, 1);
    a(0, 0) = 1.0;
    const std::string kin = write_test_matrix("singcov_cli_capon_k.json", k);
    const std::string ain = write_test_matrix("singcov_cli_capon_a.json", a);
    const CliRun run = run_cli("capon --input " + kin + " --steering " + ain + " --L 3");
    CHECK(run.exit_code == 0);
    CHECK(run.stdout_text.find("conventional power") != std::string::npos);
    CHECK(run.stdout_text.find("full MVDR power") != std::string::npos);
    CHECK(run.stdout_text.find("reduced power") != std::string::npos);
    fs::remove(kin);
    fs::remove(ain);
}

TEST_CASE("cli classify emits a decision csv") {
    RngStream rng(132, 0);
    ComplexMatrix x0(3, 5), x1(3, 5), test(3, 4);
    for (Index j = 0; j < 5; ++j)
        for (Index i = 0; i < 3; ++i) {
            x0(i, j) = rng.cnormal();
            x1(i, j) = 2.0 * rng.cnormal();
        }
    for (Index j = 0; j < 4; ++j)
        for (Index i = 0; i < 3; ++i) test(i, j) = rng.cnormal();
    const std::string p0 = write_test_matrix("singcov_cli_x0.json", x0);
    const std::string p1 = write_test_matrix("singcov_cli_x1.json", x1);
    const std::string pt = write_test_matrix("singcov_cli_test.json", test);
    const CliRun run =
        run_cli("classify --train0 " + p0 + " --train1 " + p1 + " --L 2 --test " + pt);
    CHECK(run.exit_code == 0);
    CHECK(run.stdout_text.find("index,statistic,decision") != std::string::npos);
    CHECK(run.stdout_text.find("0,") != std::string::npos);
    fs::remove(p0);
    fs::remove(p1);
    fs::remove(pt);
}

TEST_CASE("cli linear prints estimate and penalty") {
    RngStream rng(133, 0);
    ComplexMatrix x(1, 6), y(2, 6), obs(2, 1);
    for (Index j = 0; j < 6; ++j) {
        x(0, j) = rng.cnormal();
        y(0, j) = rng.cnormal();
        y(1, j) = rng.cnormal();
    }
    obs(0, 0) = rng.cnormal();
    obs(1, 0) = rng.cnormal();
    const std::string px = write_test_matrix("singcov_cli_lx.json", x);
    const std::string py = write_test_matrix("singcov_cli_ly.json", y);
    const std::string po = write_test_matrix("singcov_cli_lobs.json", obs);
    const CliRun run =
        run_cli("linear --x " + px + " --y " + py + " --L 2 --obs " + po);
    CHECK(run.exit_code == 0);
    CHECK(run.stdout_text.find("estimate:") != std::string::npos);
    CHECK(run.stdout_text.find("penalty factor") != std::string::npos);
    fs::remove(px);
    fs::remove(py);
    fs::remove(po);
}

TEST_CASE("cli bench-lw produces byte-identical csv for a fixed seed") {
    const std::string out1 = (fs::temp_directory_path() / "singcov_bench1.csv").string();
    const std::string out2 = (fs::temp_directory_path() / "singcov_bench2.csv").string();
    const std::string args = "bench-lw --M 12 --N 6 --beta 5 --L-sweep 2:5:1 --trials 2 --seed 7";
    CHECK(run_cli(args + " --out " + out1).exit_code == 0);
    CHECK(run_cli(args + " --out " + out2).exit_code == 0);
    CHECK(read_text_file(out1) == read_text_file(out2));
    CHECK(read_text_file(out1).find("L,trial,error,estimator") == 0);
    fs::remove(out1);
    fs::remove(out2);
}

TEST_CASE("cli bench-eig writes the eigenvalue table") {
    const std::string out = (fs::temp_directory_path() / "singcov_beig.csv").string();
    const CliRun run = run_cli(
        "bench-eig --M 10 --N 5 --beta 3 --L-sweep 2,5 --trials 2 --seed 3 --out " + out);
    CHECK(run.exit_code == 0);
    const std::string text = read_text_file(out);
    CHECK(text.find("L,trial,estimator,index,value") == 0);
    CHECK(text.find("truth") != std::string::npos);
    CHECK(text.find("raw") != std::string::npos);
    CHECK(text.find("invcov") != std::string::npos);
    fs::remove(out);
}

TEST_CASE("cli rejects bad arguments with exit code 1") {
    CHECK(run_cli("estimate --L 1").exit_code == 1);       // missing required --input
    CHECK(run_cli("no-such-command").exit_code == 1);
    CHECK(run_cli("bench-lw --M 8 --N 4 --L-sweep 0:0:1 --trials 1").exit_code == 1);
}
