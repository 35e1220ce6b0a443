#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coxhawkes/domain.hpp"

namespace coxhawkes {

// All floating-point output uses 17 significant digits so files round-trip
// exactly.
std::string format_double(double v);

struct CsvMetadata {
    std::uint64_t config_hash{0};
    std::uint64_t seed{0};
};

// Event CSV: header `t,x,y[,gen]`, one row per event. Writers prepend a
// single `#` metadata line carrying the config hash and seed; readers accept
// files with or without it.
void write_events_csv(std::ostream& out, const EventSet& events,
                      const std::optional<CsvMetadata>& meta = std::nullopt);
void write_events_csv_file(const std::string& path, const EventSet& events,
                           const std::optional<CsvMetadata>& meta = std::nullopt);

// Parses into insertion order (unsorted); malformed rows report the 1-based
// line number.
std::vector<Event> read_events_csv(std::istream& in);
std::vector<Event> read_events_csv_file(const std::string& path);

}  // namespace coxhawkes
