// Command-line front end. Talks to the library only through rotstar_c.h.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "rotstar_c.h"

namespace {

enum Exit { pass = 0, config_error = 1, convergence_error = 2, verification_failure = 3 };

int exit_code(rs_status s) {
    switch (s) {
        case RS_OK: return pass;
        case RS_CONFIG:
        case RS_DOMAIN:
        case RS_IO: return config_error;
        case RS_VERIFICATION: return verification_failure;
        default: return convergence_error;  // convergence, regime, solver, internal
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Post-Newtonian rotating-star solver"};
    app.set_version_flag("--version", std::string(rs_version()));
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int grid_level = -1;
    bool quiet = false;
    const char* commands[] = {"lane-emden", "solve", "verify", "kerr-check", "tov-compare", "sweep", "export"};
    const char* help[] = {"classical and distorted Lane-Emden profiles",
                          "full post-Newtonian solve with field dumps",
                          "refinement study of the residual suite",
                          "residual and asymptotic checks on the Kerr metric",
                          "non-rotating star against the TOV solution",
                          "concurrent solves over u_O with scaling exponents",
                          "convert binary field dumps to columns"};
    for (int k = 0; k < 7; ++k) {
        CLI::App* sub = app.add_subcommand(commands[k], help[k]);
        sub->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (default: output.directory)");
        sub->add_option("--grid-level", grid_level, "grid refinement level, n_in = 32*2^N + 1")->check(CLI::Range(0, 4));
        sub->add_flag("--quiet", quiet, "print nothing on success");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? pass : config_error;
    }

    std::ifstream is(config_path);
    std::stringstream text;
    text << is.rdbuf();
    if (!is) {
        std::cerr << "error: cannot read " << config_path << '\n';
        return config_error;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    char* report = nullptr;
    char* summary = nullptr;
    int passed = 1;
    const rs_status st = rs_run(command.c_str(), text.str().c_str(), out_dir.empty() ? nullptr : out_dir.c_str(),
                                grid_level, &report, &summary, &passed);
    if (st != RS_OK) {
        std::cerr << "error: " << rs_last_error() << '\n';
        return exit_code(st);
    }
    if (!quiet || !passed) std::cout << summary;
    rs_free_string(report);
    rs_free_string(summary);
    return passed ? pass : verification_failure;
}
