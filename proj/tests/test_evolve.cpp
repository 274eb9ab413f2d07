#include <catch_amalgamated.hpp>

#include <filesystem>

#include "qksa/agent.hpp"
#include "qksa/evolve.hpp"

using namespace qksa;
namespace fs = std::filesystem;

namespace {

Genome seed_genome() {
    Genome g;
    g.pool = {QPTDescriptor{"QPT-0", 5, 16384, 0.0}, QPTDescriptor{"QPT-1", 8, 8192, 0.0}};
    g.cost_tree = tree_parse("(add (add (add L E) (add A S)) (sqrt T))");
    g.time_source = TimeSource::ops;
    return g;
}

// Every gene except identity and the cost tree.
void require_same_immutable_genes(const Genome& a, const Genome& b) {
    Genome x = a;
    Genome y = b;
    for (Genome* g : {&x, &y}) {
        g->agent_id.clear();
        g->parent_id.clear();
        g->generation = 0;
        g->master_seed = 0;
        g->cost_tree = CostTree::leaf(CostOp::A);
    }
    REQUIRE(x == y);
    REQUIRE(genome_serialize(x) == genome_serialize(y));
}

fs::path scratch_dir(const char* name) {
    auto p = fs::temp_directory_path() / ("qksa_evolve_" + std::string(name));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("replication without mutation changes identity only") {
    Genome parent = seed_genome();
    parent.m_c = 0.0;
    Rng rng(1);
    const auto child = replicate(parent, 0, rng).genome;
    CHECK(child.agent_id == "0-1");
    CHECK(child.parent_id == "0");
    CHECK(child.generation == parent.generation + 1);
    CHECK(child.master_seed == derive_seed(parent.master_seed, 1));
    CHECK(child.master_seed != parent.master_seed);
    CHECK(child.cost_tree == parent.cost_tree);
    require_same_immutable_genes(parent, child);
    CHECK(replicate(parent, 1, rng).genome.agent_id == "0-2");
}

TEST_CASE("replication refuses past the child limit") {
    Genome parent = seed_genome();
    parent.max_children = 2;
    Rng rng(1);
    CHECK_NOTHROW(replicate(parent, 1, rng));
    CHECK_THROWS_AS(replicate(parent, 2, rng), ReplicationRefused);
}

TEST_CASE("different rng states give different cost trees") {
    Genome parent = seed_genome();
    parent.m_c = 0.5;
    REQUIRE(parent.cost_tree.size() == 10);
    int differ = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        Rng a(2 * i + 1);
        Rng b(2 * i + 2);
        differ += !(replicate(parent, 0, a).genome.cost_tree == replicate(parent, 0, b).genome.cost_tree);
    }
    CHECK(differ >= 90);
}

TEST_CASE("ten-generation lineage preserves immutable genes") {
    Genome g = seed_genome();
    g.max_children = 1;
    g.k_r = 0.02;
    g.bounds.t_max = 3.5;
    g.weights.w_s = 0.25;
    const Genome root = g;
    Rng rng(77);
    for (std::uint64_t gen = 1; gen <= 10; ++gen) {
        const auto spawn = replicate(g, 0, rng);
        const auto reread = SpawnFile::parse(spawn.serialize());
        REQUIRE(reread == spawn);
        REQUIRE(reread.generation() == gen);
        require_same_immutable_genes(root, reread.genome);
        g = reread.genome;
    }
    CHECK(g.agent_id == "0-1-1-1-1-1-1-1-1-1-1");
}

TEST_CASE("genome text round trip") {
    const Genome d = [] {
        Genome g;
        g.pool = {QPTDescriptor{"solo", std::nullopt, 32, 12.5}};
        return g;
    }();
    CHECK(genome_parse(genome_serialize(d)) == d);

    Genome g = seed_genome();
    g.bounds.e_max = 1e6;
    g.distance = DistanceSpec{DistanceId::hamming, 3};
    g.k_d = -0.125;
    g.qpt_choice = QptChoice::weighted;
    const auto parsed = genome_parse(genome_serialize(g));
    CHECK(parsed == g);
    CHECK(tree_serialize(parsed.cost_tree) == tree_serialize(g.cost_tree));
    CHECK(genome_serialize(parsed) == genome_serialize(g));
}

TEST_CASE("genome parse errors") {
    const auto text = genome_serialize(seed_genome());
    std::string missing;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (line.rfind("distance =", 0) != 0) missing += line + "\n";
    try {
        genome_parse(missing);
        FAIL("expected a parse error");
    } catch (const GenomeParseError& e) {
        CHECK(std::string(e.what()).find("'distance'") != std::string::npos);
    }
    CHECK_THROWS_AS(genome_parse(text + "colour = blue\n"), GenomeParseError);
    CHECK_THROWS_AS(genome_parse(text + "m_c = 0.5\n"), GenomeParseError);
    CHECK_THROWS(genome_parse("format_version = 2\n" + text));
    CHECK_THROWS(SpawnFile::parse(text));
    CHECK_THROWS(genome_parse(text.substr(0, text.find("cost_tree"))));
}

TEST_CASE("spawn files are written atomically and read back") {
    const auto dir = scratch_dir("spawn");
    Rng rng(3);
    const auto spawn = replicate(seed_genome(), 0, rng);
    const auto path = write_spawn_file(dir, spawn);
    CHECK(path == dir / "agent_0-1.genome");
    CHECK(read_text(path).rfind("format_version = 1\n", 0) == 0);
    CHECK(read_spawn_file(path) == spawn);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    CHECK(files == 1);
}

TEST_CASE("a spawn file alone reproduces the in-memory child") {
    const auto dir = scratch_dir("selfsufficient");
    Rng rng(4);
    const auto spawn = replicate(seed_genome(), 0, rng);
    const auto from_disk = read_spawn_file(write_spawn_file(dir, spawn));

    auto run = [](const Genome& g) {
        auto env = make_environment(RandomUnitaryRequest{1, 9}, derive_seed(g.master_seed, streams::environment));
        Agent agent(g, env.total_qubits());
        for (int t = 0; t < 200; ++t) agent.step(env, StepOptions{true, false});
        return agent.state().log;
    };
    CHECK(run(spawn.genome) == run(from_disk.genome));
}
