from agents.agent_sdk import PLAN_KEY, BaseAgent
from core.model import AgentRole


class TemporalAgent(BaseAgent):
    """Reviews the plan and schema for logical coherence and lists the checks the code must honor."""
    role = AgentRole.TEMPORAL
    required_keys = (PLAN_KEY,)
    template = """
        Ensure logical consistency in the following subtask.

        Subtask:
        {description}

        Overall plan:
        {plan}

        Data structures:
        {schema}

        List every rule, state transition and edge case the implementation must respect,
        one per line, and flag contradictions between the plan and the data structures.

        Feedback from the previous attempt:
        {failure_summary}
    """
