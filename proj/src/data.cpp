#include "fwrobust/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fwrobust/csv.hpp"

namespace fwrobust {
namespace {

constexpr double kPi = 3.14159265358979323846;

void add_noise(Vec& point, double noise, SeededRng& rng) {
    if (noise == 0.0) return;
    for (double& v : point) v += noise * rng.normal();
}

Dataset make_blobs(std::size_t n, std::size_t d, int class_count, double noise, SeededRng& rng) {
    // Centers 3 apart: spaced on a radius-3 circle in the first two
    // coordinates, or along the line for d = 1.
    std::vector<Vec> centers;
    for (int c = 0; c < class_count; ++c) {
        Vec center(d, 0.0);
        if (d == 1) {
            center[0] = class_count == 1 ? 0.0
                                         : -3.0 + 6.0 * static_cast<double>(c) /
                                                      static_cast<double>(class_count - 1);
        } else {
            const double angle = 2.0 * kPi * static_cast<double>(c) /
                                 static_cast<double>(class_count);
            center[0] = 3.0 * std::cos(angle);
            center[1] = 3.0 * std::sin(angle);
        }
        centers.push_back(std::move(center));
    }
    Dataset data;
    data.class_count = class_count;
    data.name = "blobs";
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(class_count));
        Vec point = centers[label];
        add_noise(point, noise, rng);
        data.features.push_back(std::move(point));
        data.labels.push_back(label);
    }
    return data;
}

Dataset make_two_moons(std::size_t n, double noise, SeededRng& rng) {
    Dataset data;
    data.class_count = 2;
    data.name = "two_moons";
    const std::size_t upper = n - n / 2;  // class 0 gets the extra point for odd n
    const std::size_t lower = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i < upper ? 0 : 1;
        const std::size_t j = label == 0 ? i : i - upper;
        const std::size_t m = label == 0 ? upper : lower;
        const double t = m <= 1 ? 0.0 : kPi * static_cast<double>(j) / static_cast<double>(m - 1);
        Vec point(2);
        if (label == 0) {
            point[0] = std::cos(t);
            point[1] = std::sin(t);
        } else {
            point[0] = 1.0 - std::cos(t);
            point[1] = 0.5 - std::sin(t);
        }
        add_noise(point, noise, rng);
        data.features.push_back(std::move(point));
        data.labels.push_back(label);
    }
    return data;
}

Dataset make_circles(std::size_t n, double noise, SeededRng& rng) {
    Dataset data;
    data.class_count = 2;
    data.name = "circles";
    const std::size_t outer = n - n / 2;
    const std::size_t inner = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i < outer ? 0 : 1;
        const std::size_t j = label == 0 ? i : i - outer;
        const std::size_t m = label == 0 ? outer : inner;
        const double t = m == 0 ? 0.0 : 2.0 * kPi * static_cast<double>(j) / static_cast<double>(m);
        const double radius = label == 0 ? 1.0 : 0.5;
        Vec point = {radius * std::cos(t), radius * std::sin(t)};
        add_noise(point, noise, rng);
        data.features.push_back(std::move(point));
        data.labels.push_back(label);
    }
    return data;
}

std::uint32_t read_be32(std::ifstream& file, const std::string& path, const char* what) {
    unsigned char bytes[4];
    if (!file.read(reinterpret_cast<char*>(bytes), 4))
        throw std::runtime_error("'" + path + "': truncated while reading " + what);
    return (static_cast<std::uint32_t>(bytes[0]) << 24) |
           (static_cast<std::uint32_t>(bytes[1]) << 16) |
           (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", v);
    return buf;
}

}  // namespace

SynthKind synth_kind_from_name(const std::string& name) {
    if (name == "blobs") return SynthKind::blobs;
    if (name == "two_moons") return SynthKind::two_moons;
    if (name == "circles") return SynthKind::circles;
    throw std::invalid_argument("unknown dataset kind '" + name +
                                "' (expected blobs, two_moons or circles)");
}

std::string synth_kind_name(SynthKind k) {
    switch (k) {
        case SynthKind::blobs: return "blobs";
        case SynthKind::two_moons: return "two_moons";
        case SynthKind::circles: return "circles";
    }
    return "blobs";
}

Dataset synth_dataset(SynthKind kind, std::size_t n, std::size_t d, int class_count,
                      double noise, SeededRng rng) {
    if (noise < 0.0) throw std::invalid_argument("noise must be >= 0");
    if (kind != SynthKind::blobs) class_count = 2;
    if (class_count < 1) throw std::invalid_argument("class_count must be >= 1");
    if (n < static_cast<std::size_t>(class_count))
        throw std::invalid_argument("need at least one example per class");
    switch (kind) {
        case SynthKind::blobs:
            if (d < 1) throw std::invalid_argument("blobs need d >= 1");
            return make_blobs(n, d, class_count, noise, rng);
        case SynthKind::two_moons: return make_two_moons(n, noise, rng);
        case SynthKind::circles: return make_circles(n, noise, rng);
    }
    throw std::invalid_argument("unknown dataset kind");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t max_n) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw std::runtime_error("cannot open '" + images_path + "'");
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw std::runtime_error("cannot open '" + labels_path + "'");

    const std::uint32_t image_magic = read_be32(images, images_path, "magic");
    if (image_magic != 0x00000803u)
        throw std::runtime_error("'" + images_path + "': magic " + hex32(image_magic) +
                                 ", expected 0x00000803 (unsigned-byte rank-3 images)");
    const std::uint32_t label_magic = read_be32(labels, labels_path, "magic");
    if (label_magic != 0x00000801u)
        throw std::runtime_error("'" + labels_path + "': magic " + hex32(label_magic) +
                                 ", expected 0x00000801 (unsigned-byte labels)");

    const std::uint32_t image_count = read_be32(images, images_path, "count");
    const std::uint32_t rows = read_be32(images, images_path, "rows");
    const std::uint32_t cols = read_be32(images, images_path, "cols");
    const std::uint32_t label_count = read_be32(labels, labels_path, "count");
    if (image_count != label_count)
        throw std::runtime_error("'" + images_path + "' holds " + std::to_string(image_count) +
                                 " images but '" + labels_path + "' holds " +
                                 std::to_string(label_count) + " labels");

    std::size_t n = image_count;
    if (max_n > 0) n = std::min(n, max_n);
    const std::size_t d = static_cast<std::size_t>(rows) * cols;
    if (d == 0) throw std::runtime_error("'" + images_path + "': zero image dimensions");

    Dataset data;
    data.name = "idx";
    std::vector<unsigned char> pixel_buf(d);
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!images.read(reinterpret_cast<char*>(pixel_buf.data()),
                         static_cast<std::streamsize>(d)))
            throw std::runtime_error("'" + images_path + "': truncated at image " +
                                     std::to_string(i));
        Vec point(d);
        for (std::size_t j = 0; j < d; ++j) point[j] = static_cast<double>(pixel_buf[j]) / 255.0;
        data.features.push_back(std::move(point));
        char label_byte = 0;
        if (!labels.read(&label_byte, 1))
            throw std::runtime_error("'" + labels_path + "': truncated at label " +
                                     std::to_string(i));
        const int label = static_cast<unsigned char>(label_byte);
        max_label = std::max(max_label, label);
        data.labels.push_back(label);
    }
    data.class_count = max_label + 1;
    return data;
}

namespace {

double parse_real(const std::string& cell, std::size_t row_number, const std::string& column) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != cell.size() || cell.empty())
        throw std::runtime_error("row " + std::to_string(row_number) + ", column '" + column +
                                 "': '" + cell + "' is not numeric");
    return value;
}

}  // namespace

Dataset load_csv_dataset(const std::string& path, const std::string& label_column) {
    const CsvTable table = read_csv(path);
    std::size_t label_index = table.header.size();
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] == label_column) label_index = i;
    if (label_index == table.header.size())
        throw std::invalid_argument("'" + path + "' has no column named '" + label_column + "'");
    if (table.header.size() < 2)
        throw std::runtime_error("'" + path + "' needs at least one feature column");
    if (table.rows.empty()) throw std::runtime_error("'" + path + "' has no data rows");

    Dataset data;
    data.name = path;
    int max_label = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t row_number = r + 2;  // 1-based, after the header
        if (row.size() != table.header.size())
            throw std::runtime_error("'" + path + "': row " + std::to_string(row_number) +
                                     " has " + std::to_string(row.size()) + " cells, header has " +
                                     std::to_string(table.header.size()));
        Vec point;
        point.reserve(row.size() - 1);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == label_index) continue;
            point.push_back(parse_real(row[c], row_number, table.header[c]));
        }
        const double raw_label = parse_real(row[label_index], row_number, label_column);
        const int label = static_cast<int>(raw_label);
        if (static_cast<double>(label) != raw_label || label < 0)
            throw std::runtime_error("'" + path + "': row " + std::to_string(row_number) +
                                     ": label '" + row[label_index] +
                                     "' is not a nonnegative integer");
        max_label = std::max(max_label, label);
        data.features.push_back(std::move(point));
        data.labels.push_back(label);
    }
    data.class_count = max_label + 1;
    return data;
}

void save_csv_dataset(const Dataset& data, const std::string& path) {
    CsvTable table;
    for (std::size_t j = 0; j < data.dim(); ++j) table.header.push_back("f" + std::to_string(j));
    table.header.push_back("label");
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<std::string> row;
        row.reserve(data.dim() + 1);
        for (double v : data.features[i]) row.push_back(to_precise_string(v));
        row.push_back(std::to_string(data.labels[i]));
        table.rows.push_back(std::move(row));
    }
    write_csv(path, table);
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.class_count = data.class_count;
    out.name = data.name;
    for (std::size_t i : indices) {
        if (i >= data.size()) throw std::out_of_range("subset index " + std::to_string(i));
        out.features.push_back(data.features[i]);
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

}  // namespace fwrobust
