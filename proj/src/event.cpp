#include "evtrack/event.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "evtrack/error.hpp"

namespace evtrack {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view next_token(std::string_view& rest) {
  std::size_t b = 0;
  while (b < rest.size() && is_space(rest[b])) ++b;
  std::size_t e = b;
  while (e < rest.size() && !is_space(rest[e])) ++e;
  std::string_view tok = rest.substr(b, e - b);
  rest.remove_prefix(e);
  return tok;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

Event parse_line(std::string_view line, std::size_t line_no, int width, int height) {
  std::string_view rest = line;
  const std::string_view tt = next_token(rest);
  const std::string_view tx = next_token(rest);
  const std::string_view ty = next_token(rest);
  const std::string_view tp = next_token(rest);
  if (tp.empty() || !next_token(rest).empty())
    throw ParseError("expected 4 fields \"t x y p\"", line_no);

  double t = 0.0;
  long x = 0, y = 0;
  int p = 0;
  if (!parse_number(tt, t) || !std::isfinite(t) || t < 0.0)
    throw ParseError("bad timestamp '" + std::string(tt) + "'", line_no);
  if (!parse_number(tx, x) || !parse_number(ty, y))
    throw ParseError("bad coordinate", line_no);
  if (!parse_number(tp, p) || (p != 0 && p != 1))
    throw ParseError("polarity must be 0 or 1", line_no);
  if (x < 0 || y < 0 || x >= width || y >= height)
    throw BoundsError("line " + std::to_string(line_no) + ": event (" + std::to_string(x) + ", " +
                      std::to_string(y) + ") outside " + std::to_string(width) + "x" +
                      std::to_string(height) + " sensor");

  return Event{t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
               static_cast<std::int8_t>(p == 1 ? 1 : -1)};
}

}  // namespace

EventStream parse_events(std::string_view text, int width, int height) {
  EventStream stream{width, height, {}};
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

    bool blank = true;
    for (char c : line) blank = blank && is_space(c);
    if (blank) continue;

    Event e = parse_line(line, line_no, width, height);
    if (!stream.events.empty() && e.t < stream.events.back().t)
      throw OrderingError("timestamp decreases", line_no);
    stream.events.push_back(e);
  }
  return stream;
}

EventStream load_events(const std::filesystem::path& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open events file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_events(text, width, height);
}

void write_events(std::ostream& out, const EventStream& stream) {
  char buf[64];
  std::string chunk;
  chunk.reserve(1 << 16);
  for (const Event& e : stream.events) {
    // Shortest fixed representation that round-trips the double exactly.
    auto res = std::to_chars(buf, buf + sizeof buf, e.t, std::chars_format::fixed);
    chunk.append(buf, res.ptr);
    chunk += ' ';
    chunk += std::to_string(e.x);
    chunk += ' ';
    chunk += std::to_string(e.y);
    chunk += e.polarity > 0 ? " 1\n" : " 0\n";
    if (chunk.size() > (1 << 16) - 64) {
      out << chunk;
      chunk.clear();
    }
  }
  out << chunk;
}

void save_events(const std::filesystem::path& path, const EventStream& stream) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write events file " + path.string());
  write_events(out, stream);
  if (!out) throw IoError("write failed for " + path.string());
}

void validate(const EventStream& stream) {
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (e.x >= stream.width || e.y >= stream.height)
      throw BoundsError("event " + std::to_string(i) + " outside sensor");
    if (e.polarity != 1 && e.polarity != -1)
      throw ContractError("event " + std::to_string(i) + " has polarity outside {-1, +1}");
    if (i > 0 && e.t < stream.events[i - 1].t)
      throw OrderingError("timestamp decreases", i + 1);
  }
}

}  // namespace evtrack
