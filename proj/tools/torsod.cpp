#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "torsod/torsod.hpp"

namespace {

struct OutputPaths {
    std::string json;
    std::string markdown;
};

int emit(const torsod::cli::CommandResult& r, const OutputPaths& out, double seconds)
{
    (r.exit_code == torsod::cli::Pass || r.exit_code == torsod::cli::Mismatch ? std::cout : std::cerr)
        << r.summary << "\n";
    std::cerr << "elapsed: " << seconds << " s\n";
    try {
        if (!out.json.empty()) torsod::write_text_file(out.json, r.report.dump(2) + "\n");
        if (!out.markdown.empty()) torsod::write_text_file(out.markdown, torsod::cli::render_markdown(r.report, seconds));
    } catch (const torsod::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return torsod::cli::IoFailure;
    }
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"torsod: semiorthogonal decompositions of toric divisorial extractions"};
    app.set_version_flag("--version", std::string("torsod ") + torsod::cli::tool_version);
    app.require_subcommand(1);

    OutputPaths out;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--json", out.json, "write the JSON report to PATH");
        sub->add_option("--markdown", out.markdown, "write the markdown report to PATH");
        sub->add_option("--seed", seed, "reserved; every computation is deterministic");
    };

    std::string classify_path;
    auto* classify = app.add_subcommand("classify", "classify a datum as Extraction, LogCrepant or Contraction");
    classify->add_option("datum", classify_path, "datum JSON file")->required();
    add_common(classify);

    std::string sod_path;
    torsod::cli::SodCommandOptions sod_opt;
    auto* sod = app.add_subcommand("sod", "blocks, window checks and a generation certificate for an Extraction datum");
    sod->add_option("datum", sod_path, "datum JSON file")->required();
    sod->add_option("--box", sod_opt.box, "label box [-B, B] per coordinate")->capture_default_str();
    sod->add_option("--max-depth", sod_opt.max_depth, "certificate recursion guard")->capture_default_str();
    add_common(sod);

    std::string oracle_target;
    torsod::cli::OracleCommandOptions oracle_opt;
    auto* orc = app.add_subcommand("oracle", "cohomology oracle self-tests and SOD cross-checks");
    orc->add_option("target", oracle_target, "catalog model name, or a model, datum or fan JSON file")->required();
    orc->add_flag("--verify-sod", oracle_opt.verify_sod, "cross-check the decomposition against the oracle");
    orc->add_option("--box", oracle_opt.box, "label box [-B, B] per coordinate")->capture_default_str();
    orc->add_option("--max-depth", oracle_opt.max_depth, "certificate recursion guard")->capture_default_str();
    add_common(orc);

    auto* list = app.add_subcommand("catalog", "list the built-in models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : torsod::cli::InvalidInput;
    }
    (void)seed;

    if (list->parsed()) {
        for (const auto& e : torsod::catalog()) std::cout << e.name << "  " << e.description << "\n";
        return 0;
    }

    auto start = std::chrono::steady_clock::now();
    torsod::cli::CommandResult r;
    try {
        if (classify->parsed())
            r = torsod::cli::cmd_classify(classify_path);
        else if (sod->parsed())
            r = torsod::cli::cmd_sod(sod_path, sod_opt);
        else
            r = torsod::cli::cmd_oracle(oracle_target, oracle_opt);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return torsod::cli::Mismatch;
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return emit(r, out, seconds);
}
