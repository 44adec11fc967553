#include "ctxrec/log.hpp"

#include <mutex>

#include <spdlog/sinks/stdout_sinks.h>

namespace ctxrec {

namespace {

std::mutex& logger_mutex() {
    static std::mutex m;
    return m;
}

std::shared_ptr<spdlog::logger>& logger_slot() {
    static std::shared_ptr<spdlog::logger> slot = [] {
        auto l = std::make_shared<spdlog::logger>("ctxrec", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        l->set_pattern("[%l] %v");
        return l;
    }();
    return slot;
}

}  // namespace

std::shared_ptr<spdlog::logger> logger() {
    std::lock_guard lock(logger_mutex());
    return logger_slot();
}

void set_logger(std::shared_ptr<spdlog::logger> replacement) {
    std::lock_guard lock(logger_mutex());
    logger_slot() = std::move(replacement);
}

}  // namespace ctxrec
