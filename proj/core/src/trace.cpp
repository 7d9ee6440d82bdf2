#include "coopdetect/trace.hpp"

namespace coopdetect {

void TraceSink::header(const nlohmann::json& fields) {
  nlohmann::json line = fields;
  line["ev"] = "header";
  *out_ << line.dump() << '\n';
  ++lines_;
}

void TraceSink::event(SimTime t, std::string_view kind, nlohmann::json fields) {
  fields["t"] = t;
  fields["ev"] = kind;
  *out_ << fields.dump() << '\n';
  ++lines_;
}

}  // namespace coopdetect
