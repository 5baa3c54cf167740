#include "rotstar_c.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <new>
#include <string>

#include "rotstar/config.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/pipeline.hpp"

struct rs_eos {
    rotstar::EquationOfState eos;
};
struct rs_solution {
    rotstar::Solution sol;
};
struct rs_field {
    rotstar::AxiField field;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_stage;

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

// Runs f, translating exceptions into status codes and the thread-local message.
template <class F>
rs_status guarded(F&& f) {
    last_error.clear();
    last_stage.clear();
    try {
        f();
        return RS_OK;
    } catch (const rotstar::Error& e) {
        last_error = e.what();
        last_stage = e.stage();
        return static_cast<rs_status>(e.status());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
    } catch (const std::exception& e) {
        last_error = e.what();
    } catch (...) {
        last_error = "unknown error";
    }
    return RS_INTERNAL;
}

void need(const void* p, const char* what) {
    if (!p) rotstar::fail(rotstar::Status::domain, std::string(what) + " is null", "api");
}

}  // namespace

extern "C" {

const char* rs_version(void) { return rotstar::library_version(); }
const char* rs_last_error(void) { return last_error.c_str(); }
const char* rs_last_error_stage(void) { return last_stage.c_str(); }
void rs_free_string(char* s) { std::free(s); }

rs_status rs_run(const char* command, const char* config_json, const char* out_dir, int grid_level,
                 char** report_json, char** summary, int* passed) {
    return guarded([&] {
        need(command, "command");
        need(config_json, "config_json");
        rotstar::RunConfig cfg = rotstar::parse_config(config_json);
        if (grid_level >= 0) rotstar::apply_grid_level(cfg, grid_level);
        const std::string dir = out_dir ? out_dir : cfg.directory;
        const rotstar::CommandResult r = rotstar::run_command(command, cfg, dir);
        if (report_json) *report_json = dup(r.report_json);
        if (summary) *summary = dup(r.summary);
        if (passed) *passed = r.passed ? 1 : 0;
    });
}

rs_status rs_config_canonical(const char* config_json, char** canonical) {
    return guarded([&] {
        need(config_json, "config_json");
        need(canonical, "canonical");
        *canonical = dup(rotstar::canonical_json(rotstar::parse_config(config_json)));
    });
}

rs_status rs_eos_create(double gamma, double A_const, double c_light, rs_eos** out) {
    return guarded([&] {
        need(out, "out");
        rotstar::EquationOfState eos;
        eos.gamma = gamma;
        eos.A_const = A_const;
        eos.c_light = c_light;
        rotstar::validate(eos);
        *out = new rs_eos{eos};
    });
}

rs_status rs_eos_pressure(const rs_eos* e, double u, double* P) {
    return guarded([&] {
        need(e, "eos");
        need(P, "P");
        *P = rotstar::pressure_from_enthalpy(e->eos, u);
    });
}

rs_status rs_eos_density(const rs_eos* e, double u, double* rho) {
    return guarded([&] {
        need(e, "eos");
        need(rho, "rho");
        *rho = rotstar::density_from_enthalpy(e->eos, u);
    });
}

rs_status rs_eos_enthalpy_of_density(const rs_eos* e, double rho, double* u) {
    return guarded([&] {
        need(e, "eos");
        need(u, "u");
        *u = rotstar::enthalpy_from_density(e->eos, rho);
    });
}

void rs_eos_free(rs_eos* e) { delete e; }

rs_status rs_solve(const char* config_json, rs_solution** out) {
    return guarded([&] {
        need(config_json, "config_json");
        need(out, "out");
        const rotstar::RunConfig cfg = rotstar::parse_config(config_json);
        *out = new rs_solution{rotstar::solve(cfg.params(), cfg.solver_options())};
    });
}

rs_status rs_solution_report(const rs_solution* s, char** report_json) {
    return guarded([&] {
        need(s, "solution");
        need(report_json, "report_json");
        *report_json = dup(rotstar::solution_report(s->sol));
    });
}

rs_status rs_solution_mass(const rs_solution* s, double* M, double* J) {
    return guarded([&] {
        need(s, "solution");
        if (M) *M = s->sol.diag.M;
        if (J) *J = s->sol.diag.J;
    });
}

rs_status rs_solution_field(const rs_solution* s, const char* name, rs_field** out) {
    return guarded([&] {
        need(s, "solution");
        need(name, "name");
        need(out, "out");
        const auto& S = s->sol;
        const std::map<std::string, const rotstar::AxiField*> fields{
            {"W", &S.U.W}, {"Y", &S.U.Y}, {"X", &S.U.X}, {"V", &S.U.V}, {"w", &S.U.w},
            {"F", &S.metric.F}, {"y", &S.metric.y}, {"q", &S.metric.q}, {"K", &S.metric.K},
            {"u_N", &S.nf.u_N}, {"rho_N", &S.nf.rho_N}, {"Phi_N", &S.nf.Phi_N}};
        const auto it = fields.find(name);
        if (it == fields.end()) rotstar::fail(rotstar::Status::domain, std::string("no field named '") + name + "'", "api");
        *out = new rs_field{*it->second};
    });
}

void rs_solution_free(rs_solution* s) { delete s; }

rs_status rs_field_eval(const rs_field* f, double varpi, double z, double* value) {
    return guarded([&] {
        need(f, "field");
        need(value, "value");
        *value = rotstar::eval(f->field, {varpi, z});
    });
}

rs_status rs_field_write_binary(const rs_field* f, const char* path) {
    return guarded([&] {
        need(f, "field");
        need(path, "path");
        rotstar::write_binary(f->field, path);
    });
}

rs_status rs_field_read_binary(const char* path, rs_field** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new rs_field{rotstar::read_binary(path)};
    });
}

void rs_field_free(rs_field* f) { delete f; }

}  // extern "C"
