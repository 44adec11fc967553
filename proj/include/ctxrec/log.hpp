#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace ctxrec {

/// Library-wide logger. Warnings (empty pre-filter results, degraded
/// metadata, inconsistent judgments) and load reports go here; the default
/// sink is standard error.
std::shared_ptr<spdlog::logger> logger();

/// Replaces the library logger, e.g. with a capturing sink in tests.
void set_logger(std::shared_ptr<spdlog::logger> replacement);

}  // namespace ctxrec
