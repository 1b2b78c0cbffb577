#ifndef SNAN_IO_HPP
#define SNAN_IO_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "snan/network.hpp"

namespace snan {

// ---------------------------------------------------------------------------
// number formatting: locale-independent, shortest round-trip

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// experiment config files: ini-style sections of key = value pairs

class ConfigFile {
public:
    static ConfigFile parse(std::istream& in) {
        ConfigFile cfg;
        std::string line;
        std::string section;
        std::ostringstream raw;
        while (std::getline(in, line)) {
            raw << line << '\n';
            const std::string stripped = strip(strip_comment(line));
            if (stripped.empty()) continue;
            if (stripped.front() == '[') {
                if (stripped.back() != ']') {
                    throw std::runtime_error("config: malformed section header: " + line);
                }
                section = strip(stripped.substr(1, stripped.size() - 2));
                cfg.sections_[section];
                continue;
            }
            const auto eq = stripped.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("config: expected key = value: " + line);
            }
            cfg.sections_[section][strip(stripped.substr(0, eq))] = strip(stripped.substr(eq + 1));
        }
        cfg.raw_text_ = raw.str();
        return cfg;
    }

    static ConfigFile load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path.string());
        return parse(in);
    }

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get_str(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end() || !s->second.count(key)) {
            throw std::runtime_error("config: missing " + section + "." + key);
        }
        return s->second.at(key);
    }

    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
        return has(section, key) ? get_str(section, key) : fallback;
    }

    double get_num(const std::string& section, const std::string& key) const {
        return parse_double(get_str(section, key), section + "." + key);
    }
    double get_num(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_num(section, key) : fallback;
    }

    long get_int(const std::string& section, const std::string& key) const {
        return static_cast<long>(parse_double(get_str(section, key), section + "." + key));
    }
    long get_int(const std::string& section, const std::string& key, long fallback) const {
        return has(section, key) ? get_int(section, key) : fallback;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = get_str(section, key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::runtime_error("config: bad boolean " + section + "." + key + " = " + v);
    }

    std::vector<std::int32_t> get_i32_list(const std::string& section, const std::string& key) const {
        std::vector<std::int32_t> out;
        for (const auto& tok : split(get_str(section, key), ',')) {
            out.push_back(static_cast<std::int32_t>(parse_double(tok, section + "." + key)));
        }
        return out;
    }

    std::vector<double> get_num_list(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        for (const auto& tok : split(get_str(section, key), ',')) {
            out.push_back(parse_double(tok, section + "." + key));
        }
        return out;
    }

    const std::string& raw_text() const { return raw_text_; }
    std::uint64_t hash() const { return fnv1a(raw_text_); }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, sep)) {
            const std::string t = strip(cur);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }

private:
    static std::string strip(const std::string& s) {
        const auto begin = s.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) return "";
        const auto end = s.find_last_not_of(" \t\r\n");
        return s.substr(begin, end - begin + 1);
    }

    static std::string strip_comment(const std::string& s) {
        const auto pos = s.find('#');
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    static double parse_double(const std::string& s, const std::string& what) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config: bad number for " + what + ": " + s);
        }
    }

    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string raw_text_;
};

// ---------------------------------------------------------------------------
// CSV emitters (spike events and weight snapshots, per the wire formats)

inline void write_spikes_csv(std::ostream& os, const std::vector<SpikeEvent>& events) {
    os << "step,unit_id\n";
    for (const auto& ev : events) os << ev.step << ',' << ev.unit_id << '\n';
}

struct WeightSnapshot {
    long step = 0;
    std::uint32_t pre = 0;
    std::uint32_t post = 0;
    double weight = 0.0;
};

inline void write_weights_csv(std::ostream& os, const std::vector<WeightSnapshot>& rows) {
    os << "step,pre_id,post_id,weight\n";
    for (const auto& row : rows) {
        os << row.step << ',' << row.pre << ',' << row.post << ',' << format_double(row.weight)
           << '\n';
    }
}

inline std::vector<SpikeEvent> read_spikes_csv(std::istream& is) {
    std::vector<SpikeEvent> events;
    std::string line;
    if (!std::getline(is, line)) return events;
    if (line != "step,unit_id" && line != "step,unit_id\r") {
        throw std::runtime_error("spike csv: bad header: " + line);
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("spike csv: bad row: " + line);
        SpikeEvent ev;
        ev.step = std::stol(line.substr(0, comma));
        ev.unit_id = static_cast<std::uint32_t>(std::stoul(line.substr(comma + 1)));
        events.push_back(ev);
    }
    return events;
}

inline void write_sic_table_csv(std::ostream& os, const SicConfigTable& table) {
    os << "ip3_to_sic_weight,sic_current_decay,sg_threshold,measured_amplitude_hz,measured_window_ms\n";
    for (const auto& row : table.rows) {
        os << row.ip3_to_sic_weight << ',' << row.sic_current_decay << ',' << row.sg_threshold
           << ',' << format_double(row.measured_amplitude_hz) << ','
           << format_double(row.measured_window_ms) << '\n';
    }
}

inline SicConfigTable read_sic_table_csv(std::istream& is) {
    SicConfigTable table;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("sic table csv: empty file");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = ConfigFile::split(line, ',');
        if (cells.size() != 5) throw std::runtime_error("sic table csv: bad row: " + line);
        SicConfigRow row;
        row.ip3_to_sic_weight = std::stoi(cells[0]);
        row.sic_current_decay = std::stoi(cells[1]);
        row.sg_threshold = std::stoi(cells[2]);
        row.measured_amplitude_hz = std::stod(cells[3]);
        row.measured_window_ms = std::stod(cells[4]);
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// static SVG plots

namespace svg {

inline std::string num(double v) {
    // two decimals, via integer arithmetic to stay locale-free
    const bool neg = v < 0;
    const long long scaled = static_cast<long long>((neg ? -v : v) * 100.0 + 0.5);
    std::string s = (neg && scaled != 0 ? "-" : "");
    s += std::to_string(scaled / 100);
    const long long frac = scaled % 100;
    if (frac != 0) {
        s += '.';
        s += static_cast<char>('0' + frac / 10);
        if (frac % 10 != 0) s += static_cast<char>('0' + frac % 10);
    }
    return s;
}

} // namespace svg

// Spike raster: one dot per event, time on x, unit id on y. Emits exactly one
// circle element per event so plots can be audited against the CSV.
inline void write_raster_svg(std::ostream& os, const std::vector<SpikeEvent>& events,
                             long n_steps, std::uint32_t n_units, const std::string& title) {
    const double width = 900.0, height = 450.0, margin = 40.0;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<text x=\"" << svg::num(margin) << "\" y=\"20\" font-size=\"14\">" << title
       << "</text>\n";
    os << "<rect x=\"" << svg::num(margin) << "\" y=\"" << svg::num(margin) << "\" width=\""
       << svg::num(width - 2 * margin) << "\" height=\"" << svg::num(height - 2 * margin)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double sx = (width - 2 * margin) / std::max(1.0, static_cast<double>(n_steps));
    const double sy = (height - 2 * margin) / std::max(1.0, static_cast<double>(n_units));
    for (const auto& ev : events) {
        os << "<circle cx=\"" << svg::num(margin + ev.step * sx) << "\" cy=\""
           << svg::num(height - margin - ev.unit_id * sy) << "\" r=\"1\"/>\n";
    }
    os << "</svg>\n";
}

// One polyline per weight series.
inline void write_weight_trajectories_svg(std::ostream& os,
                                          const std::vector<std::vector<double>>& series,
                                          double w_min, double w_max, const std::string& title) {
    const double width = 900.0, height = 450.0, margin = 40.0;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<text x=\"" << svg::num(margin) << "\" y=\"20\" font-size=\"14\">" << title
       << "</text>\n";
    std::size_t longest = 1;
    for (const auto& s : series) longest = std::max(longest, s.size());
    const double sx = (width - 2 * margin) / static_cast<double>(longest);
    const double span = std::max(1e-9, w_max - w_min);
    const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    for (std::size_t i = 0; i < series.size(); ++i) {
        os << "<polyline fill=\"none\" stroke=\"" << palette[i % 10] << "\" points=\"";
        for (std::size_t t = 0; t < series[i].size(); ++t) {
            const double x = margin + static_cast<double>(t) * sx;
            const double y = height - margin - (series[i][t] - w_min) / span * (height - 2 * margin);
            os << svg::num(x) << ',' << svg::num(y) << ' ';
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
}

inline void write_bars_svg(std::ostream& os, const std::vector<std::string>& labels,
                           const std::vector<double>& values, const std::string& title) {
    const double width = 600.0, height = 400.0, margin = 50.0;
    double vmax = 1e-9;
    for (double v : values) vmax = std::max(vmax, v);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<text x=\"" << svg::num(margin) << "\" y=\"20\" font-size=\"14\">" << title
       << "</text>\n";
    const double slot = (width - 2 * margin) / std::max<std::size_t>(1, values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double h = values[i] / vmax * (height - 2 * margin);
        const double x = margin + static_cast<double>(i) * slot + slot * 0.15;
        os << "<rect x=\"" << svg::num(x) << "\" y=\"" << svg::num(height - margin - h)
           << "\" width=\"" << svg::num(slot * 0.7) << "\" height=\"" << svg::num(h)
           << "\" fill=\"#1f77b4\"/>\n";
        os << "<text x=\"" << svg::num(x) << "\" y=\"" << svg::num(height - margin + 16)
           << "\" font-size=\"11\">" << (i < labels.size() ? labels[i] : "") << "</text>\n";
        os << "<text x=\"" << svg::num(x) << "\" y=\"" << svg::num(height - margin - h - 4)
           << "\" font-size=\"11\">" << format_double(values[i]) << "</text>\n";
    }
    os << "</svg>\n";
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace snan

#endif
