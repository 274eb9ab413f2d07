// Genome persistence and replication. A child is its parent's genome with a
// mutated cost tree, written as a spawn file that the hypervisor instantiates.

#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qksa/genome.hpp"
#include "qksa/least.hpp"
#include "qksa/rng.hpp"

namespace qksa {

inline constexpr int kSpawnFormatVersion = 1;

class GenomeParseError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Line-oriented `key = value` text; `qpt` lines repeat once per strategy.
inline std::string genome_serialize(const Genome& g) {
    std::string out;
    for (auto key : kGenomeScalarKeys) {
        out += key;
        out += " = ";
        out += genome_value(g, key);
        out += '\n';
    }
    for (const auto& q : g.pool) out += "qpt = " + format_qpt(q) + "\n";
    out += "cost_tree = " + tree_serialize(g.cost_tree) + "\n";
    return out;
}

/// Inverse of genome_serialize. Every key is required; unknown keys are errors.
/// A leading `format_version` line is accepted and must equal 1.
inline Genome genome_parse(std::string_view text) {
    Genome g;
    g.pool.clear();
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw GenomeParseError("genome line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key == "format_version") {
            if (value != std::to_string(kSpawnFormatVersion))
                throw GenomeParseError("unsupported format_version '" + std::string(value) + "'");
            continue;
        }
        if (key != "qpt" && !seen.insert(std::string(key)).second)
            throw GenomeParseError("genome line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
        try {
            if (!set_genome_key(g, key, value))
                throw GenomeParseError("genome line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
        } catch (const GenomeParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw GenomeParseError("genome line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    for (auto key : kGenomeScalarKeys)
        if (!seen.contains(key)) throw GenomeParseError("missing required key '" + std::string(key) + "'");
    if (!seen.contains("cost_tree")) throw GenomeParseError("missing required key 'cost_tree'");
    if (g.pool.empty()) throw GenomeParseError("missing required key 'qpt'");
    g.validate();
    return g;
}

/// A child genome ready to be instantiated. The child's master_seed is its child seed.
struct SpawnFile {
    int format_version = kSpawnFormatVersion;
    Genome genome;

    const std::string& parent_id() const { return genome.parent_id; }
    std::uint64_t generation() const { return genome.generation; }
    std::uint64_t child_seed() const { return genome.master_seed; }

    std::string serialize() const { return "format_version = " + std::to_string(format_version) + "\n" + genome_serialize(genome); }

    static SpawnFile parse(std::string_view text) {
        const auto first = detail::trim(text.substr(0, text.find('\n')));
        if (first.rfind("format_version", 0) != 0) throw GenomeParseError("spawn file must start with format_version");
        return SpawnFile{kSpawnFormatVersion, genome_parse(text)};
    }

    friend bool operator==(const SpawnFile&, const SpawnFile&) = default;
};

class ReplicationRefused : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string child_id(const Genome& parent, std::uint64_t ordinal) {
    return parent.agent_id + "-" + std::to_string(ordinal);
}

/// Copies every immutable gene, mutates the cost tree, and assigns the child's
/// identity. `children_spawned` is the parent's count before this child.
inline SpawnFile replicate(const Genome& parent, std::uint64_t children_spawned, Rng& rng) {
    if (children_spawned >= parent.max_children)
        throw ReplicationRefused("agent " + parent.agent_id + " reached its replication limit");
    SpawnFile spawn;
    spawn.genome = parent;
    spawn.genome.agent_id = child_id(parent, children_spawned + 1);
    spawn.genome.parent_id = parent.agent_id;
    spawn.genome.generation = parent.generation + 1;
    spawn.genome.master_seed = derive_seed(parent.master_seed, children_spawned + 1);
    spawn.genome.cost_tree = mutate(parent.cost_tree, parent.m_c, rng);
    return spawn;
}

inline std::filesystem::path spawn_path(const std::filesystem::path& spawn_dir, std::string_view agent_id) {
    return spawn_dir / ("agent_" + std::string(agent_id) + ".genome");
}

inline void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes `<spawn_dir>/agent_<id>.genome` via write-temp-then-rename.
inline std::filesystem::path write_spawn_file(const std::filesystem::path& spawn_dir, const SpawnFile& spawn) {
    std::filesystem::create_directories(spawn_dir);
    const auto path = spawn_path(spawn_dir, spawn.genome.agent_id);
    write_text_atomic(path, spawn.serialize());
    return path;
}

inline SpawnFile read_spawn_file(const std::filesystem::path& path) { return SpawnFile::parse(read_text(path)); }

}  // namespace qksa
