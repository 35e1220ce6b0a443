#include "coxhawkes/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "coxhawkes/errors.hpp"

namespace coxhawkes {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_events_csv(std::ostream& out, const EventSet& events,
                      const std::optional<CsvMetadata>& meta) {
    if (meta) {
        out << "# config_hash=" << meta->config_hash << " seed=" << meta->seed << "\n";
    }
    bool any_gen = false;
    for (const Event& e : events) {
        if (e.gen) {
            any_gen = true;
            break;
        }
    }
    out << (any_gen ? "t,x,y,gen" : "t,x,y") << "\n";
    for (const Event& e : events) {
        out << format_double(e.t) << ',' << format_double(e.x) << ','
            << format_double(e.y);
        if (any_gen) {
            out << ',';
            if (e.gen) out << *e.gen;
        }
        out << "\n";
    }
}

void write_events_csv_file(const std::string& path, const EventSet& events,
                           const std::optional<CsvMetadata>& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    write_events_csv(out, events, meta);
    if (!out) throw DataError("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trimmed(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t line_no, const char* col) {
    std::string f = trimmed(field);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || ptr != f.data() + f.size()) {
        std::ostringstream os;
        os << "line " << line_no << ": cannot parse " << col << " value '" << field << "'";
        throw DataError(os.str());
    }
    return v;
}

}  // namespace

std::vector<Event> read_events_csv(std::istream& in) {
    std::vector<Event> events;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    bool has_gen = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (!header_seen) {
            if (fields.size() < 3 || trimmed(fields[0]) != "t" || trimmed(fields[1]) != "x" ||
                trimmed(fields[2]) != "y" ||
                (fields.size() == 4 && trimmed(fields[3]) != "gen") || fields.size() > 4) {
                std::ostringstream os;
                os << "line " << line_no << ": expected header 't,x,y[,gen]', got '" << line
                   << "'";
                throw DataError(os.str());
            }
            has_gen = fields.size() == 4;
            header_seen = true;
            continue;
        }
        if (fields.size() != (has_gen ? 4u : 3u)) {
            std::ostringstream os;
            os << "line " << line_no << ": expected " << (has_gen ? 4 : 3)
               << " fields, got " << fields.size();
            throw DataError(os.str());
        }
        Event e;
        e.t = parse_number(fields[0], line_no, "t");
        e.x = parse_number(fields[1], line_no, "x");
        e.y = parse_number(fields[2], line_no, "y");
        if (has_gen) {
            std::string g = trimmed(fields[3]);
            if (!g.empty()) {
                int gv = 0;
                auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), gv);
                if (ec != std::errc{} || ptr != g.data() + g.size() || gv < 0) {
                    std::ostringstream os;
                    os << "line " << line_no << ": invalid gen value '" << fields[3] << "'";
                    throw DataError(os.str());
                }
                e.gen = gv;
            }
        }
        events.push_back(e);
    }
    if (!header_seen) throw DataError("event CSV: missing header 't,x,y[,gen]'");
    return events;
}

std::vector<Event> read_events_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open events file: " + path);
    return read_events_csv(in);
}

}  // namespace coxhawkes
