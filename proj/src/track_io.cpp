#include "evtrack/track_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "evtrack/error.hpp"

namespace evtrack {

std::string_view to_string(Disposal d) {
  switch (d) {
    case Disposal::active:
      return "active";
    case Disposal::lost:
      return "lost";
    case Disposal::exited:
      return "exited";
  }
  return "active";
}

Disposal disposal_from_string(std::string_view s) {
  if (s == "active") return Disposal::active;
  if (s == "lost") return Disposal::lost;
  if (s == "exited") return Disposal::exited;
  throw FormatError("unknown disposal reason '" + std::string(s) + "'");
}

namespace {

void write_row(std::ostream& out, int id, const TrackPoint& p) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f\n", id, p.t, p.x, p.y);
  out << buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  return fields;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "'", line);
  }
}

int to_int(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad integer '" + s + "'", line);
  }
}

}  // namespace

void write_tracks_csv(std::ostream& out, const std::vector<FeatureTrack>& tracks) {
  out << "id,t,x,y\n";
  for (const auto& tr : tracks)
    for (const auto& p : tr.samples) write_row(out, tr.id, p);
}

void write_tracks_csv(std::ostream& out, const std::vector<GroundTruthTrack>& tracks) {
  out << "id,t,x,y\n";
  for (const auto& tr : tracks)
    for (const auto& p : tr.samples) write_row(out, tr.id, p);
}

std::vector<GroundTruthTrack> read_tracks_csv(std::istream& in) {
  std::map<int, GroundTruthTrack> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line_no == 1 && line.rfind("id", 0) == 0) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw ParseError("expected \"id,t,x,y\"", line_no);
    const int id = to_int(f[0], line_no);
    auto& tr = by_id[id];
    tr.id = id;
    const TrackPoint p{to_double(f[1], line_no), to_double(f[2], line_no), to_double(f[3], line_no)};
    if (!tr.samples.empty() && p.t <= tr.samples.back().t)
      throw OrderingError("track " + std::to_string(id) + " sample times not increasing", line_no);
    tr.samples.push_back(p);
  }
  std::vector<GroundTruthTrack> out;
  for (auto& [id, tr] : by_id) out.push_back(std::move(tr));
  return out;
}

std::vector<GroundTruthTrack> load_tracks_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tracks file " + path.string());
  return read_tracks_csv(in);
}

void write_disposal_csv(std::ostream& out, const std::vector<FeatureTrack>& tracks) {
  out << "id,t_created,t_disposed,reason,final_cost\n";
  char buf[160];
  for (const auto& tr : tracks) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%s,%.6f\n", tr.id, tr.t_created, tr.t_disposed,
                  std::string(to_string(tr.reason)).c_str(), tr.final_cost);
    out << buf;
  }
}

std::vector<DisposalRecord> read_disposal_csv(std::istream& in) {
  std::vector<DisposalRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line_no == 1 && line.rfind("id", 0) == 0) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw ParseError("expected \"id,t_created,t_disposed,reason,final_cost\"", line_no);
    DisposalRecord r;
    r.id = to_int(f[0], line_no);
    r.t_created = to_double(f[1], line_no);
    r.t_disposed = to_double(f[2], line_no);
    try {
      r.reason = disposal_from_string(f[3]);
    } catch (const FormatError& e) {
      throw ParseError(e.what(), line_no);
    }
    r.final_cost = to_double(f[4], line_no);
    out.push_back(r);
  }
  return out;
}

std::vector<FeatureTrack> load_feature_tracks(const std::filesystem::path& tracks_csv,
                                              const std::filesystem::path& disposal_csv) {
  const auto samples = load_tracks_csv(tracks_csv);
  std::ifstream in(disposal_csv);
  if (!in) throw IoError("cannot open disposal log " + disposal_csv.string());
  const auto records = read_disposal_csv(in);
  std::map<int, const GroundTruthTrack*> by_id;
  for (const auto& s : samples) by_id[s.id] = &s;
  std::vector<FeatureTrack> out;
  for (const auto& r : records) {
    FeatureTrack tr;
    tr.id = r.id;
    tr.t_created = r.t_created;
    tr.t_disposed = r.t_disposed;
    tr.reason = r.reason;
    tr.final_cost = r.final_cost;
    if (auto it = by_id.find(r.id); it != by_id.end()) tr.samples = it->second->samples;
    out.push_back(std::move(tr));
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path.string() + ": " + ec.message());
}

}  // namespace evtrack
