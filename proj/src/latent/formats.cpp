#include "latent/formats.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "latent/csv.hpp"

namespace latent {

namespace {

double parse_number(const std::string& field, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(field, &pos);
        if (pos != field.size()) throw std::invalid_argument("trailing junk");
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed number '" + field + "'");
    }
}

Date parse_date_field(const std::string& field, std::size_t line_no) {
    auto d = parse_date(field);
    if (!d) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed date '" + field + "'");
    }
    return *d;
}

}  // namespace

std::vector<PointRow> read_point_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    CsvReader reader(in);
    CsvRow row;
    if (!reader.next(row)) throw ParseError(path + ": empty file");
    if (row.fields.size() < 3 || row.fields[0] != "participant_id" || row.fields[1] != "date") {
        throw ParseError(path + ": header must start with participant_id,date");
    }
    const std::size_t dim = row.fields.size() - 2;
    std::vector<PointRow> out;
    while (reader.next(row)) {
        if (row.fields.size() != dim + 2) {
            throw ParseError("line " + std::to_string(row.line_no) + ": expected " +
                             std::to_string(dim + 2) + " fields");
        }
        PointRow p;
        p.participant_id = row.fields[0];
        p.date = parse_date_field(row.fields[1], row.line_no);
        for (std::size_t i = 0; i < dim; ++i) {
            p.values.push_back(parse_number(row.fields[i + 2], row.line_no));
        }
        out.push_back(std::move(p));
    }
    return out;
}

void write_points_csv(const std::vector<PointRow>& rows, const std::string& path) {
    std::string body = "participant_id,date,x,y\n";
    for (const auto& r : rows) {
        if (r.values.size() != 2) throw DomainError("point rows must carry x,y");
        body += csv_escape(r.participant_id) + ',' + to_string(r.date) + ',' +
                fmt_double(r.values[0]) + ',' + fmt_double(r.values[1]) + '\n';
    }
    write_file_atomic(path, body);
}

void write_labels_csv(const std::vector<LabelRow>& rows, const std::string& path) {
    std::string body = "participant_id,date,cluster\n";
    for (const auto& r : rows) {
        body += csv_escape(r.participant_id) + ',' + to_string(r.date) + ',' +
                std::to_string(r.cluster) + '\n';
    }
    write_file_atomic(path, body);
}

std::vector<LabelRow> read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    CsvReader reader(in);
    CsvRow row;
    if (!reader.next(row) ||
        row.fields != std::vector<std::string>{"participant_id", "date", "cluster"}) {
        throw ParseError(path + ": header must be participant_id,date,cluster");
    }
    std::vector<LabelRow> out;
    while (reader.next(row)) {
        if (row.fields.size() != 3) {
            throw ParseError("line " + std::to_string(row.line_no) + ": expected 3 fields");
        }
        LabelRow r;
        r.participant_id = row.fields[0];
        r.date = parse_date_field(row.fields[1], row.line_no);
        int v = 0;
        auto [p, ec] =
            std::from_chars(row.fields[2].data(), row.fields[2].data() + row.fields[2].size(), v);
        if (ec != std::errc{} || p != row.fields[2].data() + row.fields[2].size() || v < 0) {
            throw ParseError("line " + std::to_string(row.line_no) + ": malformed cluster label");
        }
        r.cluster = v;
        out.push_back(std::move(r));
    }
    return out;
}

void write_state_vectors_csv(const std::vector<StateVector>& rows, const std::string& path) {
    const std::size_t k = rows.empty() ? 0 : rows.front().values.size();
    std::string body = "participant_id,period_start,period_end";
    for (std::size_t s = 1; s <= k; ++s) body += ",state" + std::to_string(s);
    body += ",iterations,converged\n";
    for (const auto& r : rows) {
        body += csv_escape(r.participant_id) + ',' + to_string(r.period_start) + ',' +
                to_string(r.period_end);
        for (double v : r.values) {
            body += ',';
            body += fmt_double(v);
        }
        body += ',' + std::to_string(r.iterations) + ',' + (r.converged ? "true" : "false") + '\n';
    }
    write_file_atomic(path, body);
}

std::vector<StateVector> read_state_vectors_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    CsvReader reader(in);
    CsvRow row;
    if (!reader.next(row)) throw ParseError(path + ": empty file");
    const auto& h = row.fields;
    if (h.size() < 6 || h[0] != "participant_id" || h[1] != "period_start" ||
        h[2] != "period_end" || h[h.size() - 2] != "iterations" || h.back() != "converged") {
        throw ParseError(path + ": unexpected state vector header");
    }
    const std::size_t k = h.size() - 5;
    for (std::size_t s = 0; s < k; ++s) {
        if (h[3 + s] != "state" + std::to_string(s + 1)) {
            throw ParseError(path + ": unexpected state vector header");
        }
    }
    std::vector<StateVector> out;
    while (reader.next(row)) {
        if (row.fields.size() != h.size()) {
            throw ParseError("line " + std::to_string(row.line_no) + ": field count mismatch");
        }
        StateVector r;
        r.participant_id = row.fields[0];
        r.period_start = parse_date_field(row.fields[1], row.line_no);
        r.period_end = parse_date_field(row.fields[2], row.line_no);
        for (std::size_t s = 0; s < k; ++s) {
            r.values.push_back(parse_number(row.fields[3 + s], row.line_no));
        }
        r.iterations = static_cast<int>(parse_number(row.fields[3 + k], row.line_no));
        const auto& conv = row.fields[4 + k];
        if (conv == "true") {
            r.converged = true;
        } else if (conv == "false") {
            r.converged = false;
        } else {
            throw ParseError("line " + std::to_string(row.line_no) + ": malformed converged flag");
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_kl_trace_csv(const std::vector<std::pair<int, double>>& trace,
                        const std::string& path) {
    std::string body = "iteration,kl\n";
    for (const auto& [it, kl] : trace) {
        body += std::to_string(it) + ',' + fmt_double(kl) + '\n';
    }
    write_file_atomic(path, body);
}

}  // namespace latent
