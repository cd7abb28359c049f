// Writes the synthetic three-community fixture used by the end-to-end tests.
#include <CLI11.hpp>

#include <iostream>

#include "fixture.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate the synthetic fixture corpus and mock scripts"};
    std::string dir = "fixture";
    commprobe::fixture::Options opts;
    app.add_option("dir", dir, "Output directory");
    app.add_option("--users", opts.users, "Number of users");
    app.add_option("--posts", opts.posts, "Number of corpus records");
    app.add_option("--seed", opts.seed, "Generator seed");
    app.add_option("--tweets-per-topic", opts.tweets_per_topic, "Generation samples per topic in the run config");
    app.add_option("--swed-samples", opts.swed_samples, "Samples per SWED prompt in the run config");
    app.add_option("--classification-per-community", opts.classification_per_community,
                   "Classification posts per community in the run config");
    CLI11_PARSE(app, argc, argv);
    try {
        const auto fx = commprobe::fixture::write_fixture(dir, opts);
        std::cout << "fixture written; run: commprobe all --config " << fx.config.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
