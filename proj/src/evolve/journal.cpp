#include <cstdio>
#include <fstream>

#include "stegcost/evolve.hpp"

namespace stegcost::evolve {

nlohmann::json JournalRecord::to_json() const {
  return {{"iter", iter}, {"event_type", event_type}, {"payload", payload}, {"rng_state_digest", rng_state_digest}};
}

JournalRecord JournalRecord::from_json(const nlohmann::json& j) {
  JournalRecord r;
  r.iter = j.at("iter").get<int>();
  r.event_type = j.at("event_type").get<std::string>();
  r.payload = j.at("payload");
  r.rng_state_digest = j.at("rng_state_digest").get<std::string>();
  return r;
}

bool JournalRecord::operator==(const JournalRecord& o) const {
  // Compare the serialized form so doubles match bit for bit after a round trip.
  return to_json().dump() == o.to_json().dump();
}

Journal::Journal(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  out_ = std::make_unique<std::ofstream>(file, std::ios::binary | std::ios::trunc);
  if (!*out_) throw std::runtime_error("cannot open journal " + file.string());
}

void Journal::append(JournalRecord r) {
  if (out_) {
    *out_ << r.to_json().dump() << '\n';
    out_->flush();
    if (!*out_) throw std::runtime_error("journal write failed");
  }
  records_.push_back(std::move(r));
}

std::vector<JournalRecord> Journal::read(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read journal " + file.string());
  std::vector<JournalRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(JournalRecord::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string rng_digest(const Xorshift64Star& rng) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const std::uint64_t s = rng.state();
  for (int k = 0; k < 8; ++k) {
    h ^= (s >> (8 * k)) & 0xFF;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stegcost::evolve
