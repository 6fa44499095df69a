// Copyright 2026 The ds2ta-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Process-wide allocator settings for the command-line tools.

#ifndef DS2TA_ALLOCATOR_H_
#define DS2TA_ALLOCATOR_H_

namespace ds2ta {

// Keeps freed tensor buffers in the heap instead of returning them to the
// kernel, so the per-step allocate/free cycle does not page-fault. A no-op
// outside glibc.
void RetainFreedMemory();

}  // namespace ds2ta

#endif  // DS2TA_ALLOCATOR_H_
