#pragma once

#include <string>
#include <vector>

namespace eie {

// The 14 chest X-ray observations used for clinical-efficacy scoring, in the
// fixed order shared by label vectors, guidance slots (guidance_dim = 14) and
// reports.
const std::vector<std::string>& observations14();

// The 5 most common observations (guidance_dim = 5 order; also the Acc5 set):
// atelectasis, cardiomegaly, consolidation, edema, pleural effusion.
const std::vector<std::string>& observations5();

// Default medical-entity phrases for masked entity modeling and the synthetic
// grammar. Multi-word phrases tokenize to their constituent words.
const std::vector<std::string>& entity_phrases();

// Index of an entity phrase within the guidance vector of the given width,
// or -1 when that observation is not covered.
int guidance_slot(const std::string& phrase, int guidance_dim);

}  // namespace eie
