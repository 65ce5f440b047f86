from agents.agent_sdk import PLAN_KEY, BaseAgent
from core.model import AgentRole


class MotorAgent(BaseAgent):
    """
    Implementation. Turns the plan, the data structures and the logic review
    into working code for one subtask.
    """
    role = AgentRole.MOTOR
    required_keys = (PLAN_KEY,)
    template = """
        Implement the following subtask as working code.

        Subtask:
        {description}

        Overall plan:
        {plan}

        Data structures:
        {schema}

        Logic review:
        {review}

        Reply with the code only. Honor every rule listed in the logic review.

        Feedback from the previous attempt:
        {failure_summary}
    """
