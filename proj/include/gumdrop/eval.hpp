#pragma once

#include <string>
#include <vector>

#include "gumdrop/corpus.hpp"

namespace gumdrop {

struct Score {
    int64_t tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0;
    bool p_defined = true, r_defined = true;  // false when a denominator was zero

    void finalize();
};

// Token-level boundary scoring. Positive class is SentStart (task=sent,
// document-initial tokens excluded) or BeginSeg (task=seg, all tokens count).
Score score_boundaries(const std::vector<Document>& gold, const std::vector<Document>& pred,
                       Task task);

// Token-level connective scoring; B and I are distinct unless merge_bi.
Score score_connectives(const std::vector<Document>& gold, const std::vector<Document>& pred,
                        bool merge_bi = false);

struct CorpusScore {
    std::string name;
    Score score;
};

// Fixed-width P/R/F table with mean and population-std rows, followed by
// machine-readable corpus<TAB>metric<TAB>value lines.
std::string report(const std::vector<CorpusScore>& scores);

}  // namespace gumdrop
