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

#include "csforge/pipeline.h"

#include "csforge/errors.h"

namespace csforge {

const char* SystemKindName(SystemKind kind) {
  switch (kind) {
    case SystemKind::kAsr: return "ASR";
    case SystemKind::kSt: return "ST";
    case SystemKind::kLast: return "LAST";
  }
  return "?";
}

std::vector<Segment> SegmentByLid(const Utterance& utt) {
  ValidateUtterance(utt, static_cast<int>(utt.frames.size()));
  std::vector<Segment> out;
  for (const auto& span : utt.lid_spans)
    out.push_back({span.start, span.end, span.language,
                   std::vector<int>(utt.frames.begin() + span.start,
                                    utt.frames.begin() + span.end)});
  return out;
}

std::string SegmentRouting::Joined() const {
  std::string out;
  for (size_t i = 0; i < segments.size(); ++i) {
    if (i > 0) out += ' ';
    out += segments[i].text;
  }
  return out;
}

SegmentRouting RoutePipeline(const Utterance& utt, const Seq2SeqModel& asr_model,
                             const Seq2SeqModel& st_model) {
  SegmentRouting r;
  for (auto& seg : SegmentByLid(utt)) {
    const bool tgt = seg.language == Language::kTgt;
    RoutedSegment rs{std::move(seg), tgt ? SystemKind::kAsr : SystemKind::kSt, {}};
    rs.text = DecodeGreedy(tgt ? asr_model : st_model, rs.segment.frames);
    r.segments.push_back(std::move(rs));
  }
  return r;
}

std::string PipelineDecode(const Utterance& utt, const Seq2SeqModel& asr_model,
                           const Seq2SeqModel& st_model) {
  return RoutePipeline(utt, asr_model, st_model).Joined();
}

SegmentRouting RouteGivenLid(const Utterance& utt, const Seq2SeqModel& last_model) {
  SegmentRouting r;
  for (auto& seg : SegmentByLid(utt)) {
    RoutedSegment rs{std::move(seg), SystemKind::kLast, {}};
    rs.text = DecodeGreedy(last_model, rs.segment.frames);
    r.segments.push_back(std::move(rs));
  }
  return r;
}

std::string GivenLidDecode(const Utterance& utt, const Seq2SeqModel& last_model) {
  return RouteGivenLid(utt, last_model).Joined();
}

std::string LastDecode(const Utterance& utt, const Seq2SeqModel& last_model) {
  return DecodeGreedy(last_model, utt.frames);
}

}  // namespace csforge
