#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "snan/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool ablate = false;
    std::string replay;
    std::string record_drive;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "experiment config file")->required();
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--seed", args.seed, "64-bit seed (overrides the config)")
        ->each([&args](const std::string&) { args.seed_given = true; });
    sub->add_flag("--ablate-astrocyte", args.ablate, "disconnect astrocyte outputs");
    sub->add_option("--replay", args.replay, "drive the experiment from a recorded spike csv");
    sub->add_option("--record-drive", args.record_drive, "record the drive stream to a spike csv");
}

int run_one(const std::string& name, const CommonArgs& args) {
    const snan::ConfigFile cfg = snan::ConfigFile::load(args.config_path);
    snan::RunOptions opt;
    opt.seed = args.seed_given ? args.seed
                               : static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
    opt.out_dir = !args.out_dir.empty() ? args.out_dir
                                        : cfg.get_str("run", "out", "out-" + name);
    opt.ablate_astrocyte = args.ablate || cfg.get_bool("run", "ablate_astrocyte", false);
    opt.replay_path = args.replay;
    opt.record_drive = args.record_drive;

    const auto result = snan::run_experiment(name, cfg, opt);
    snan::emit_outputs(result, opt.out_dir);
    std::cout << result.summary.dump(2) << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"snan: discrete-time spiking neuronal-astrocytic network simulator"};
    app.require_subcommand(1);

    CommonArgs sync_args, group_args, memory_args, chaos_args;
    auto* sync = app.add_subcommand("sync", "astrocyte-induced synchronization");
    add_common(sync, sync_args);
    auto* group = app.add_subcommand("group-sync", "two astrocytes, two synchrony groups");
    add_common(group, group_args);
    auto* memory = app.add_subcommand("memory", "single-shot pattern memorization");
    add_common(memory, memory_args);
    auto* chaos = app.add_subcommand("chaos", "order-to-chaos monitoring");
    add_common(chaos, chaos_args);

    auto* table_cmd = app.add_subcommand("sic-table", "regenerate the sic configuration table");
    std::string weights_arg, decays_arg, thresholds_arg, table_out = "sic_table.csv";
    table_cmd->add_option("--weights", weights_arg, "comma-separated ip3->sic weights");
    table_cmd->add_option("--decays", decays_arg, "comma-separated sic decays");
    table_cmd->add_option("--thresholds", thresholds_arg, "comma-separated sg thresholds");
    table_cmd->add_option("--out", table_out, "output csv path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        const nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << std::endl;
        return e.get_exit_code();
    }

    try {
        if (sync->parsed()) return run_one("sync", sync_args);
        if (group->parsed()) return run_one("group-sync", group_args);
        if (memory->parsed()) return run_one("memory", memory_args);
        if (chaos->parsed()) return run_one("chaos", chaos_args);
        if (table_cmd->parsed()) {
            auto parse_list = [](const std::string& s) {
                std::vector<std::int32_t> out;
                for (const auto& tok : snan::ConfigFile::split(s, ',')) out.push_back(std::stoi(tok));
                return out;
            };
            const auto weights = weights_arg.empty() ? snan::default_sic_weight_range()
                                                     : parse_list(weights_arg);
            const auto decays = decays_arg.empty() ? snan::default_sic_decay_range()
                                                   : parse_list(decays_arg);
            const auto thresholds = thresholds_arg.empty() ? snan::default_sic_threshold_range()
                                                           : parse_list(thresholds_arg);
            const auto table = snan::build_sic_table(weights, decays, thresholds,
                                                     snan::table_threads_from_env(0));
            std::ostringstream os;
            snan::write_sic_table_csv(os, table);
            snan::write_text_file(table_out, os.str());
            std::cout << "{\"rows\": " << table.rows.size() << ", \"out\": \"" << table_out
                      << "\"}" << std::endl;
            return 0;
        }
    } catch (const std::exception& e) {
        const nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    return 0;
}
