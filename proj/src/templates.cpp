#include "uprop/templates.hpp"

namespace uprop::orchestrator {

namespace {

constexpr const char* kOsSystem =
    R"PROMPT(You are an assistant that will act like a person, I'will play the role of linux(ubuntu) operating system. Your goal is to implement the operations required by me or answer to the question proposed by me. For each of your turn, you should first think what you should do, and then take exact one of the three actions: "bash", "finish" or "answer".

1. If you think you should execute some bash code, take bash action, and you should print like this:

Think: put your thought here.

Act: bash

```bash
# put your bash code here
```

2. If you think you have finished the task, take finish action, and you should print like this:

Think: put your thought here.

Act: finish

3. If you think you have got the answer to the question, take answer action, and you should print like this:

Think: put your thought here.

Act: answer(Your answer to the question should be put in this pair of parentheses)

If the output is too long, I will truncate it. The truncated output is not complete. You have to deal with the truncating problem by yourself. Attention, your bash code should not contain any input operation. Once again, you should take only exact one of the three actions in each turn.

Now, my problem is:

tell me how many files are in the directory "/etc"?)PROMPT";

constexpr const char* kOsDemoTurn1 =
    R"PROMPT(Think: To count the files in /etc, I need to print all the files in it.

Act: bash

```bash
ls /etc
```)PROMPT";

constexpr const char* kOsDemoObs1 =
    R"PROMPT(The output of the OS:
cpi cron.hourly fuse.conf iproute2 lvm networkd-dispatcher protocols selinux tmpfiles.d [truncated because the output is too long])PROMPT";

constexpr const char* kOsDemoTurn2 =
    R"PROMPT(Think: The output has been truncated because it is too long, so I need to count files by script directly.

Act: bash

```bash
ls -1 /etc | wc -l
```)PROMPT";

constexpr const char* kOsDemoObs2 =
    R"PROMPT(The output of the OS:
220)PROMPT";

constexpr const char* kOsDemoTurn3 =
    R"PROMPT(Think: Now I get the answer, it is 220.

Act: answer(220))PROMPT";

constexpr const char* kOsNewProblem =
    "Now, I will start a new problem in a new OS. My problem is:\n\n";

constexpr const char* kReactHeader =
    R"PROMPT(Solve a question answering task with interleaving Thought, Action, Observation steps. Thought can reason about the current situation, and Action can be three types:
(1) Search[entity], which searches the exact entity on Wikipedia and returns the first paragraph if it exists. If not, it will return some similar entities to search.
(2) Lookup[keyword], which returns the next sentence containing keyword in the current passage.
(3) Finish[answer], which returns the answer and finishes the task.
Here are some examples.

Question: What is the elevation range for the area that the eastern sector of the Colorado orogeny extends into?

Thought 1: I need to search Colorado orogeny, find the area that the eastern sector of the Colorado orogeny extends into, then find the elevation range of the area.

Action 1: Search[Colorado orogeny]

Observation 1: The Colorado orogeny was an episode of mountain building (an orogeny) in Colorado and surrounding areas.

Thought 2: It does not mention the eastern sector. So I need to look up eastern sector.

Action 2: Lookup[eastern sector]

Observation 2: (Result 1 / 1) The eastern sector extends into the High Plains and is called the Central Plains orogeny.

Thought 3: The eastern sector of Colorado orogeny extends into the High Plains. So I need to search High Plains and find its elevation range.

Action 3: Search[High Plains]

Observation 3: High Plains refers to one of two distinct land regions:

Thought 4: I need to instead search High Plains (United States).

Action 4: Search[High Plains (United States)]

Observation 4: The High Plains are a subregion of the Great Plains. From east to west, the High Plains rise in elevation from around 1,800 to 7,000 ft (550 to 2,130 m).[3]

Thought 5: High Plains rise in elevation from around 1,800 to 7,000 ft, the answer is 1,800 to 7,000 ft.

Action 5: Finish[1,800 to 7,000 ft]

Question: )PROMPT";

}  // namespace

std::vector<client::ChatMessage> os_template_messages(
    const std::string& instruction) {
  return {
      {"user", kOsSystem},
      {"assistant", kOsDemoTurn1},
      {"user", kOsDemoObs1},
      {"assistant", kOsDemoTurn2},
      {"user", kOsDemoObs2},
      {"assistant", kOsDemoTurn3},
      {"user", kOsNewProblem + instruction},
  };
}

std::vector<client::ChatMessage> react_template_messages(
    const std::string& instruction) {
  return {{"user", kReactHeader + instruction}};
}

}  // namespace uprop::orchestrator
