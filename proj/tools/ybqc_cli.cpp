// ybqc command line. Every scenario key can be overridden as `--key value`.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ybqc/report_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPhysics = 3;

struct Invocation {
    std::string scenario_path;
    std::vector<std::string> overrides; // leftover `--key value` tokens
};

ybqc::Scenario build_scenario(const Invocation& inv) {
    ybqc::Scenario s = inv.scenario_path.empty() ? ybqc::Scenario{} : ybqc::load_scenario(inv.scenario_path);
    const auto& rest = inv.overrides;
    for (std::size_t n = 0; n < rest.size(); ++n) {
        std::string tok = rest[n];
        if (tok.rfind("--", 0) != 0)
            throw ybqc::ConfigError("unexpected argument '" + tok + "'");
        tok = tok.substr(2);
        std::string value;
        if (const auto eq = tok.find('='); eq != std::string::npos) {
            value = tok.substr(eq + 1);
            tok = tok.substr(0, eq);
        } else {
            if (n + 1 >= rest.size())
                throw ybqc::ConfigError("option '--" + tok + "' needs a value");
            value = rest[++n];
        }
        if (!ybqc::is_scenario_key(tok))
            throw ybqc::ConfigError("unknown option '--" + tok + "'");
        ybqc::set_scenario_value(s, tok, value);
    }
    return s;
}

void emit(const ybqc::Scenario& s, const ybqc::Artifacts& a) {
    if (!s.output_dir.empty()) {
        ybqc::write_artifacts(s.output_dir, a);
        for (const auto& [name, _] : a)
            std::cout << s.output_dir << '/' << name << '\n';
        std::cout << s.output_dir << "/manifest.json\n";
        return;
    }
    const bool many = a.size() > 1;
    for (const auto& [name, content] : a) {
        if (many)
            std::cout << "# " << name << '\n';
        std::cout << content;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Yb-171 optical-lattice quantum computer model"};
    app.require_subcommand(1);
    app.allow_extras(false);

    Invocation inv;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"levels", "3P2 F=3/2 Zeeman levels and moments (levels.csv)"},
        {"detunings", "three-photon detunings vs field (detunings.csv)"},
        {"ddi", "dipole-dipole couplings for one pair (ddi.json)"},
        {"address", "addressing spectrum of one plane (spectrum.csv)"},
        {"plan", "plan and validate addressing gradients (plan.json)"},
        {"simulate", "three-photon rotation and CNOT reports"},
        {"feasibility", "intensity, lattice, scattering and bias checks (feasibility.json)"},
        {"compile", "compile and run a circuit file (schedule.json, run.json)"},
        {"run", "run the scenario's pipeline"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->allow_extras();
        sub->add_option("--scenario", inv.scenario_path, "scenario file (key = value lines)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        auto* sub = app.get_subcommands().front();
        inv.overrides = sub->remaining();
        const ybqc::Scenario s = build_scenario(inv);
        const std::string cmd = sub->get_name();
        if (cmd == "run") {
            if (inv.scenario_path.empty())
                throw ybqc::ConfigError("run needs --scenario");
            emit(s, ybqc::run_pipeline(s));
        } else {
            ybqc::validate_scenario(s);
            emit(s, ybqc::run_step(cmd, s));
        }
    } catch (const ybqc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ybqc::PhysicsError& e) {
        std::cerr << "physics error: " << e.what() << '\n';
        return kExitPhysics;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
