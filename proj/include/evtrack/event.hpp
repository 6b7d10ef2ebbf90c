#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace evtrack {

struct Event {
  double t = 0.0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t polarity = 1;  // +1 or -1

  friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
  int width = 0;
  int height = 0;
  std::vector<Event> events;
};

// Plain-text "t x y p" lines, p in {0, 1}. Blank lines are skipped;
// anything else that does not parse is a ParseError carrying the line number.
EventStream parse_events(std::string_view text, int width, int height);
EventStream load_events(const std::filesystem::path& path, int width, int height);

void write_events(std::ostream& out, const EventStream& stream);
void save_events(const std::filesystem::path& path, const EventStream& stream);

// Checks the stream invariants: nondecreasing time, coordinates in bounds,
// polarity in {-1, +1}.
void validate(const EventStream& stream);

}  // namespace evtrack
