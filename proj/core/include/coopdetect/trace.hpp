#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "coopdetect/types.hpp"

namespace coopdetect {

/// Line-delimited JSON event trace. One object per line, keys:
/// `t` (seconds), `ev` (event kind), then event-specific fields.
class TraceSink {
 public:
  explicit TraceSink(std::ostream& out) : out_(&out) {}

  void header(const nlohmann::json& fields);
  void event(SimTime t, std::string_view kind, nlohmann::json fields = nlohmann::json::object());

  std::uint64_t lines() const { return lines_; }

 private:
  std::ostream* out_;
  std::uint64_t lines_ = 0;
};

}  // namespace coopdetect
