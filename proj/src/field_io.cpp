#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "qsurf/error.hpp"
#include "qsurf/grid.hpp"

namespace qsurf {

namespace {

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
}

}  // namespace

std::filesystem::path raw_path_for(const std::filesystem::path& header_path) {
    std::filesystem::path p = header_path;
    p.replace_extension(".raw");
    return p;
}

void write_field(const ScalarField& field, const std::filesystem::path& header_path) {
    const Grid& g = field.grid();
    nlohmann::ordered_json header;
    header["dim"] = g.dim();
    header["origin"] = std::vector<double>(g.origin().begin(), g.origin().begin() + g.dim());
    header["h"] = g.spacing();
    header["cells_per_axis"] = std::vector<int>(g.cells().begin(), g.cells().begin() + g.dim());
    header["value_count"] = field.size();
    header["byte_order"] = "little";
    header["scalar"] = "float64";

    std::ofstream hs(header_path);
    if (!hs) throw Error(ErrorCode::io_error, "cannot write " + header_path.string());
    hs << header.dump(2) << '\n';

    std::vector<std::uint64_t> words(field.size());
    for (std::size_t n = 0; n < field.size(); ++n) words[n] = to_little(std::bit_cast<std::uint64_t>(field[n]));
    const auto raw = raw_path_for(header_path);
    std::ofstream rs(raw, std::ios::binary);
    if (!rs) throw Error(ErrorCode::io_error, "cannot write " + raw.string());
    rs.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 8));
    if (!rs) throw Error(ErrorCode::io_error, "short write to " + raw.string());
}

ScalarField read_field(const std::filesystem::path& header_path) {
    std::ifstream hs(header_path);
    if (!hs) throw Error(ErrorCode::missing_input, "field header not found: " + header_path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, header_path.string() + ": " + e.what());
    }
    if (header.value("byte_order", "") != "little" || header.value("scalar", "") != "float64")
        throw Error(ErrorCode::parse_error, header_path.string() + ": only little-endian float64 fields are supported");
    const int dim = header.at("dim").get<int>();
    const auto origin = header.at("origin").get<std::vector<double>>();
    const auto cells = header.at("cells_per_axis").get<std::vector<int>>();
    const Grid g = build_grid(dim, origin, header.at("h").get<double>(), cells);
    const std::size_t count = header.at("value_count").get<std::size_t>();
    if (count != g.node_count()) throw Error(ErrorCode::parse_error, header_path.string() + ": value_count disagrees with grid");

    const auto raw = raw_path_for(header_path);
    std::ifstream rs(raw, std::ios::binary);
    if (!rs) throw Error(ErrorCode::missing_input, "field data not found: " + raw.string());
    std::vector<std::uint64_t> words(count);
    rs.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * 8));
    if (rs.gcount() != static_cast<std::streamsize>(count * 8))
        throw Error(ErrorCode::parse_error, raw.string() + ": truncated field data");
    std::vector<double> values(count);
    for (std::size_t n = 0; n < count; ++n) values[n] = std::bit_cast<double>(to_little(words[n]));
    return ScalarField(g, std::move(values));
}

}  // namespace qsurf
