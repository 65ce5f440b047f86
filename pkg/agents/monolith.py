from agents.agent_sdk import BaseAgent
from core.model import AgentRole


class MonolithAgent(BaseAgent):
    """Single-agent baseline: writes the whole program from the objective in one pass."""
    role = AgentRole.MONOLITH
    template = """
        Write a complete program for the following programming objective.

        Objective:
        {description}

        Reply with the code only, including the data structures, the main logic and unit tests.

        Feedback from the previous attempt:
        {failure_summary}
    """
