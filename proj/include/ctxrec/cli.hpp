#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxrec::cli {

/// Process exit statuses, one per error category.
enum ExitCode : int {
    kOk = 0,
    kDomain = 1,  ///< domain, numeric, structural and precondition errors
    kUsage = 2,
    kParse = 3,
    kIntegrity = 4,  ///< integrity and duplicate-rating errors
    kNotFound = 5,
    kColdStart = 6,
};

/// Effective settings of one run. Every field has a default; config files
/// use the field names as keys.
struct RunConfig {
    std::string dataset;           ///< defaults to $CTXREC_DATASET_ROOT
    std::string format = "auto";   ///< movielens, comoda, or auto (directory = movielens)
    std::string split = "u1";      ///< u1..u5, ua, ub, custom:<f>, cv, or a comma list
    std::string split_source = "generate";  ///< generate, or shipped (MovieLens uK/ua/ub files)
    std::string context;           ///< e.g. "time=3,mood=1"
    std::string match_policy = "strict";
    std::size_t k = 30;
    std::size_t min_overlap = 2;
    std::optional<double> alpha;   ///< unset: 1 for MovieLens (no context), 0.7 otherwise
    std::size_t n = 10;
    double threshold = 4.0;
    std::string measure = "pearson";
    std::string variant = "mean-centered";
    std::string weights = "frequency";  ///< frequency, file:<table>, or matrix:<judgments>
    std::string scale = "approach5";    ///< quantization scale for frequency weights
    std::string aggregation = "mean";   ///< genre score over an item's genres: mean or max
    std::string out;
    std::uint64_t seed = 1998;
    unsigned workers = 0;               ///< 0 = hardware concurrency
    std::optional<std::uint32_t> user;

    /// Every key in config-file syntax ("key = value"), defaults included.
    std::string to_text() const;

    /// Sets one field from text. Throws ParseError naming the key.
    void set(std::string_view key, std::string_view value);

    static const std::vector<std::string_view>& keys();
};

/// Applies a config file of "key = value" lines ('#' comments) to `config`.
void apply_config_file(RunConfig& config, const std::filesystem::path& file);

/// Runs one command line (args[0] is the program name). Results go to `out`,
/// diagnostics and usage text to `err`. Returns an ExitCode.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctxrec::cli
