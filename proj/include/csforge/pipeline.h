// Copyright 2026 The cs-forge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CSFORGE_PIPELINE_H_
#define CSFORGE_PIPELINE_H_

#include <string>
#include <vector>

#include "csforge/corpus.h"
#include "csforge/model.h"

namespace csforge {

enum class SystemKind { kAsr, kSt, kLast };
const char* SystemKindName(SystemKind kind);

struct Segment {
  int start = 0;
  int end = 0;
  Language language = Language::kTgt;
  std::vector<int> frames;
};

// One segment per lid span, frames sliced at span boundaries.
std::vector<Segment> SegmentByLid(const Utterance& utt);

struct RoutedSegment {
  Segment segment;
  SystemKind system = SystemKind::kLast;
  std::string text;
};

struct SegmentRouting {
  std::vector<RoutedSegment> segments;
  std::string Joined() const;  // single-space join, no punctuation repair
};

// Oracle-LID baseline: TGT segments go to the ASR model, SRC segments to the
// ST model. Only lid_spans decide the routing.
SegmentRouting RoutePipeline(const Utterance& utt, const Seq2SeqModel& asr_model,
                             const Seq2SeqModel& st_model);
std::string PipelineDecode(const Utterance& utt, const Seq2SeqModel& asr_model,
                           const Seq2SeqModel& st_model);

// Oracle-LID segmentation with every segment decoded by the LAST model.
SegmentRouting RouteGivenLid(const Utterance& utt, const Seq2SeqModel& last_model);
std::string GivenLidDecode(const Utterance& utt, const Seq2SeqModel& last_model);

// Single decode over the whole utterance; no segmentation, no LID.
std::string LastDecode(const Utterance& utt, const Seq2SeqModel& last_model);

}  // namespace csforge

#endif  // CSFORGE_PIPELINE_H_
