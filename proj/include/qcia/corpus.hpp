#pragma once

#include "qcia/degrade.hpp"

namespace qcia {

// Procedurally generated desk corpus: textured images with gradient
// backgrounds, sinusoidal gratings, fine noise, and a few bright rectangular
// objects whose boxes become detection ground truth. Fully determined by the
// spec (no bundled binaries).
struct CorpusSpec {
    int count = 20;
    int width = 96;
    int height = 96;
    int channels = 1;
    int identities = 0;  // 0 disables identity labels
    uint64_t seed = 1;
};

std::vector<CorpusItem> make_desk_corpus(const CorpusSpec& spec);

// Writes images as PGM/PPM plus labels.json; reload with load_corpus_dir.
void write_corpus(const std::vector<CorpusItem>& corpus, const std::string& dir);
std::vector<CorpusItem> load_corpus_dir(const std::string& dir);

}  // namespace qcia
