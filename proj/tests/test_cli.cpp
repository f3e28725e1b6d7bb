#include <catch_amalgamated.hpp>

#include <filesystem>

#include "torsod/commands.hpp"

using namespace torsod;
using namespace torsod::cli;

namespace {

std::string data(const std::string& name) { return std::string(TORSOD_DATA_DIR) + "/" + name; }

std::string scratch(const std::string& name, const std::string& text)
{
    auto dir = std::filesystem::temp_directory_path() / "torsod_test_cli";
    std::filesystem::create_directories(dir);
    std::string path = (dir / name).string();
    write_text_file(path, text);
    return path;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("fnv1a digest", "[cli]")
{
    // Reference values of the 64-bit FNV-1a function.
    CHECK(fnv1a_digest("") == "cbf29ce484222325");
    CHECK(fnv1a_digest("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_digest("foobar") == "85944171f73967e8");
}

TEST_CASE("classify command", "[cli][classify]")
{
    CommandResult r = cmd_classify(data("a1-half.json"));
    CHECK(r.exit_code == Pass);
    CHECK(r.summary == "Extraction, sigma = -1");
    CHECK(r.report["status"] == "pass");
    CHECK(r.report["classification"]["type"] == "Extraction");
    CHECK(r.report["classification"]["sigma"] == "-1");
    CHECK(r.report["input"]["digest"].get<std::string>().rfind("fnv1a64:", 0) == 0);

    CHECK(cmd_classify(data("smooth-blowup.json")).summary == "Contraction, sigma = 1");
    CHECK(cmd_classify(data("a1-crepant.json")).summary == "LogCrepant, sigma = 0");

    r = cmd_classify(data("not-coprime.json"));
    CHECK(r.exit_code == InvalidInput);
    CHECK(r.report["status"] == "invalid-input");
    CHECK(contains(r.report["error"].get<std::string>(), "NotCoprime"));

    r = cmd_classify(data("no-such-file.json"));
    CHECK(r.exit_code == IoFailure);
    CHECK(r.report["status"] == "io-error");

    CHECK(cmd_classify(scratch("broken.json", "{ \"n\": ")).exit_code == InvalidInput);
    CHECK(cmd_classify(scratch("extra.json", R"({"n": 1, "alpha": 1, "rays": [[1], [1]], "a": [1, -1], "r": [1, 1], "z": 0})"))
              .exit_code == InvalidInput);
}

TEST_CASE("sod command", "[cli][sod]")
{
    CommandResult r = cmd_sod(data("a1-half.json"), SodCommandOptions{3, 64});
    CHECK(r.exit_code == Pass);
    for (const char* key : {"parameters", "datum", "classification", "windows", "fibration", "class_groups",
                            "spanning_classes", "block_labels", "box_blocks", "fully_faithful_check",
                            "semiorthogonality_check", "certificate"})
        CHECK(r.report.contains(key));
    CHECK(r.report["certificate"]["accepted"] == true);
    CHECK(r.report["certificate"]["targets"] == 49);
    CHECK(r.report["fully_faithful_check"]["passed"] == true);
    CHECK(r.report["semiorthogonality_check"]["passed"] == true);
    CHECK(contains(r.summary, "certificate: accepted (49 targets"));

    r = cmd_sod(data("a1-crepant.json"), {});
    CHECK(r.exit_code == InvalidInput);
    CHECK(cmd_sod(data("smooth-blowup.json"), {}).exit_code == InvalidInput);
    CHECK(cmd_sod(data("no-such-file.json"), {}).exit_code == IoFailure);
    CHECK(cmd_sod(data("a1-half.json"), SodCommandOptions{-1, 64}).exit_code == InvalidInput);
}

TEST_CASE("sod command is deterministic", "[cli][sod]")
{
    std::string a = cmd_sod(data("a2-third.json"), SodCommandOptions{3, 64}).report.dump(2);
    std::string b = cmd_sod(data("a2-third.json"), SodCommandOptions{3, 64}).report.dump(2);
    CHECK(a == b);
    CHECK_FALSE(contains(a, "elapsed"));
}

TEST_CASE("oracle command on a fan", "[cli][oracle]")
{
    CommandResult r = cmd_oracle(data("p1-stacky.json"), OracleCommandOptions{false, 3, 64});
    CHECK(r.exit_code == Pass);
    CHECK(r.report.contains("fan"));
    CHECK(r.report["self_test"]["passed"] == true);
    CHECK(contains(r.summary, "oracle self-tests pass"));
    CHECK(cmd_oracle(data("missing.json"), {}).exit_code == IoFailure);
    CHECK(cmd_oracle("no-such-model", {}).exit_code == IoFailure);
    CHECK(cmd_oracle(scratch("ray.json", R"({"lattice_rank": 1, "rays": [{"v": [1], "r": 1}], "max_cones": [[0]]})"), {})
              .exit_code == InvalidInput);
}

TEST_CASE("oracle command on models", "[cli][oracle]")
{
    CommandResult r = cmd_oracle("a1-half", OracleCommandOptions{true, 2, 64});
    CHECK(r.exit_code == Pass);
    CHECK(r.report["sod"]["skipped"] == false);
    CHECK(r.report["sod"]["passed"] == true);
    CHECK(contains(r.summary, "SOD checks pass"));

    r = cmd_oracle("smooth-blowup", OracleCommandOptions{true, 2, 64});
    CHECK(r.exit_code == Pass);
    CHECK(r.report["sod"]["skipped"] == true);
    CHECK(r.report["sod"]["reason"] == "Contraction");
    CHECK(contains(r.summary, "SOD checks skipped: Contraction"));

    r = cmd_oracle("a1-half", OracleCommandOptions{false, 1, 64});
    CHECK_FALSE(r.report.contains("sod"));

    std::string model = scratch("model.json", model_json(canned_example("a2-third")).dump());
    CHECK(cmd_oracle(model, OracleCommandOptions{true, 1, 64}).exit_code == Pass);
    CHECK(cmd_oracle(data("a1-half.json"), OracleCommandOptions{true, 1, 64}).exit_code == Pass);
}

TEST_CASE("markdown rendering", "[cli][markdown]")
{
    Json rep = Json::object();
    rep["command"] = "demo";
    rep["status"] = "pass";
    rep["rows"] = Json::array({{{"x", 1}, {"y", "a"}}, {{"x", 2}, {"y", "b"}}});
    rep["nested"] = {{"inner", {1, 2, 3}}};
    std::string md = render_markdown(rep);
    CHECK(md.rfind("# torsod demo", 0) == 0);
    CHECK(contains(md, "| x | y |"));
    CHECK(contains(md, "| 2 | b |"));
    CHECK(contains(md, "inner"));
    CHECK_FALSE(contains(md, "elapsed"));
    CHECK(contains(render_markdown(rep, 1.5), "elapsed: 1.500 s"));

    Json many = Json::object();
    many["rows"] = Json::array();
    for (int i = 0; i < 10; ++i) many["rows"].push_back({{"i", i}});
    std::string cut = render_markdown(many, -1, 3);
    CHECK(contains(cut, "| 2 |"));
    CHECK_FALSE(contains(cut, "| 3 |"));
}

TEST_CASE("sod markdown mirrors the JSON report", "[cli][markdown]")
{
    CommandResult r = cmd_sod(data("a1-half.json"), SodCommandOptions{2, 64});
    std::string md = render_markdown(r.report);
    for (const char* key : {"classification", "fully_faithful_check", "semiorthogonality_check", "certificate"})
        CHECK(contains(md, key));
}
