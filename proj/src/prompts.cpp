// Model-facing text, kept verbatim.
#include "manifail/prompts.hpp"

namespace manifail {

const std::array<std::array<std::string_view, 5>, 8>& question_templates() {
  static constexpr std::array<std::array<std::string_view, 5>, 8> kTemplates{{
      {{
          R"(Please describe the task the robot is performing in the video.)",
          R"(Based on the video, what task is the robot carrying out?)",
          R"(Can you identify what task the robot is doing in the provided video?)",
          R"(What is the robot doing in the video? Please describe its task.)",
          R"(From the video, what task is the robot engaged in?)",
      }},
      {{
          R"(This is a video of a robotic arm performing a task, please break down its execution into a sequence of substages.)",
          R"(Given the video of a robotic arm doing a task, please plan its actions as a sequence of substages.)",
          R"(In the video, the robotic arm executes a task. Please break down its execution into a sequence of substages.)",
          R"(Watch the video of the robotic arm performing a task, please outline the process as a substages sequence.)",
          R"(Based on the video showing a robotic arm carrying out a task, please generate a sequence of substages for its execution.)",
      }},
      {{
          R"(This is a video of a robotic arm performing a task, was the task successfully completed?)",
          R"(Based on the video of the robotic arm executing a task, did it finish the task successfully?)",
          R"(In the video, the robotic arm executes a task, can you determine whether it was successful?)",
          R"(Please assess if the robotic arm has successfully accomplished the task.)",
          R"(In the video, the robotic arm executes a task, was it successful?)",
      }},
      {{
          R"(This is a video of a robotic arm performing a task, please identify the type of error that occurred during execution.)",
          R"(Based on the video of the robotic arm carrying out a task, what type of error took place during the task?)",
          R"(The robotic arm failed to complete the task, can you specify the type of error that happened?)",
          R"(Please describe the error type that occurred during the robotic arm's execution of the task.)",
          R"(From the video of the robotic arm performing a task, what kind of error can be observed during the task?)",
      }},
      {{
          R"(This is a video of a robotic arm performing a task, please identify the subtask stage where the error occurred.)",
          R"(This is a video of a robotic arm performing a task, during which subtask did the error happen?)",
          R"(The robotic arm failed to complete the task, can you locate the specific subtask in which the error occurred?)",
          R"(Please determine at what subtask stage the error took place in the robotic arm's performance of the task.)",
          R"(From the video of the robotic arm carrying out a task, identify the phase of the task where the error happened.)",
      }},
      {{
          R"(This is a video of a robotic arm performing a task, please explain in detail the reason for the task failure.)",
          R"(Based on the video, provide a detailed explanation of why the robotic arm failed to complete the task.)",
          R"(The robotic arm failed to complete the task, can you describe in detail the cause of the failure in the video?)",
          R"(Please analyze the video and explain thoroughly what led to the failure of the task.)",
          R"(From the video of the robotic arm executing a task, give a detailed explanation of the reason behind the task failure.)",
      }},
      {{
          R"(This is a video of a robotic arm performing a task, an error occurred during execution. Please provide high-level corrective instructions to help the robot recover and complete the task successfully.)",
          R"(Based on the video showing an error during the robotic arm 's execution of a task, give detailed high-level guidance for correcting the error and enabling task completion.)",
          R"(In this video, an error happened while the robotic arm was performing the task, please suggest high-level recovery steps so the robot can continue and complete the task.)",
          R"(The robotic arm failed to complete the task, please analyze the error in the robotic arm's task from the video and propose high-level correction actions that would allow successful task completion.)",
          R"(From the video of the robotic arm failing during the task, provide high-level corrective commands to guide it to recover and finish the task.)",
      }},
      {{
          R"(This is a video of a robotic arm performing a task, an error occurred during execution. Please provide low-level corrective commands to help the robot recover and complete the task successfully.)",
          R"(Based on the video, an error happened while the robot was executing a task, give detailed low-level instructions to correct the issue and allow the task to be finished.)",
          R"(According to the video of the robotic arm executing a task, please suggest specific low-level recovery actions to enable successful task completion.)",
          R"(From the video showing an error in the robotic arm's task, provide precise low-level commands for error correction and recovery.)",
          R"(In the video, an error occurred during the robot's performance of the task, please give low-level control instructions to help it recover and complete the task.)",
      }},
  }};
  return kTemplates;
}

std::string_view annotation_prompt() {
  return R"(This is a video of a robot arm performing a task, and the task is failed.

Here is the basic information of the video:
- Task: {task}
- Subtask: {subtask}
- Error type: {error type}
- Error stage: {error stage}
- Error detail: {error detail}
- Correction suggestion: {error correction}
- Perturbation ([x, y, z]): {error low level}
The perturbation is the difference between the actual position of the end-effector and the desired target position when the error occurs, where the X-axis points in front of the manipulator, the Y-axis points to the left, and the Z-axis points up. Namely, if the X-axis is positive, the end-effector is in front of the desired target position and causes the task to fail.

According to the video and the information, you need to answer the following questions:
1. Explain why the task is failed in detail.
2. Give detailed High-level correction instructions to help the robot arm to recover from the failure. The high-level correction should describe what subtask the robot arm should perform to recover from the failure.
3. Give detailed Low-level correction instructions to help the robot arm to recover from the failure. The low-level correction should describe which direction and how much the robot arm should move to recover from the failure.

Please note that specific numerical values should not be given to describe the extent of the low-level correction.
An example of the low-level correction is: "Move the robot arm backward then move the robot arm to the left to align with the target object".
Please note that specific numerical values should not be given in the explanation of the failure reason and the high-level correction, you should instead using rich language to describe the failure reason and the high-level correction.

Your answer should be in the following JSON format:
{
    "reason": <reason>,
    "high level correction": <high level correction>,
    "low level correction": <low level correction>
})";
}

std::string_view judge_prompt() {
  return R"(You are an expert evaluator. Assess the quality of a model's response to the user's query.

Question: {question}

Reference answer: {ref}

Model's response: {pred}

Evaluate the model's response on the following criteria:
- correctness: factual accuracy and consistency with the reference answer.
- relevance: how well the model's response addresses the question.
- completeness: whether all key aspects of the reference answer are covered.

For each criterion, provide a score from 0 to 5 and a **brief** explanation, the score should be an integer.
The score you give needs to be strict and demanding.

Output ONLY the JSON object in the following format:
{
"criteria": {
    "correctness": {"score": <0-5>, "explanation": <brief explanation>},
    "relevance": {"score": <0-5>, "explanation": <brief explanation>},
    "completeness": {"score": <0-5>, "explanation": <brief explanation>},
}
})";
}

}  // namespace manifail
