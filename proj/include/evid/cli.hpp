#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace evid::cli {

// Command implementations shared by the binary and the tests. Each
// throws on failure; main() turns exceptions into a structured error
// line and a nonzero exit code.

struct GenArgs {
    std::string config_path;
    std::string out_dir;                // overrides "out" in the config when set
    std::optional<std::uint64_t> seed;  // overrides the generator seed
};
void cmd_gen(const GenArgs& args);

struct TrainArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> seeds;
};
void cmd_train(const TrainArgs& args);

struct EvalArgs {
    std::string config_path;
    std::string model_dir;  // cmd_train output directory
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> seeds;
};
void cmd_eval(const EvalArgs& args);

struct SweepArgs {
    std::string config_path;
    std::string axis;  // "lambda" or "activation"
    std::vector<std::string> values;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};
void cmd_sweep(const SweepArgs& args);

struct CompareArgs {
    std::vector<std::string> report_paths;
    std::string out_csv;
};
void cmd_compare(const CompareArgs& args);

}  // namespace evid::cli
