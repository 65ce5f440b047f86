from agents.agent_sdk import PLAN_KEY, BaseAgent
from core.model import AgentRole


class ParietalAgent(BaseAgent):
    """Organizes the data structures and spatial layout described by the plan."""
    role = AgentRole.PARIETAL
    required_keys = (PLAN_KEY,)
    template = """
        Organize the data structures for the following subtask.

        Subtask:
        {description}

        Overall plan:
        {plan}

        Define every class, its fields and how instances relate to each other. Prefer
        simple containers and keep the layout consistent with the plan.

        Feedback from the previous attempt:
        {failure_summary}
    """
