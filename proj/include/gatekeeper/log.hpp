#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace gatekeeper {

// Library-wide logger ("gatekeeper"). Never receives PIN codes, image or
// audio bytes.
std::shared_ptr<spdlog::logger> logger();
void set_logger(std::shared_ptr<spdlog::logger> logger);

}  // namespace gatekeeper
