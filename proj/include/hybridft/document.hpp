#pragma once

#include <string>
#include <vector>

namespace hybridft::gov {

// One corpus record flowing through the curation stages.
struct Document {
    std::string id;
    std::string text;
    std::string lang;   // empty = unidentified
    int label = -1;     // -1 = unlabeled
    std::string provenance;  // stage annotations, e.g. "C0;C1"
};

using Corpus = std::vector<Document>;

}  // namespace hybridft::gov
