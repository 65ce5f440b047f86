from agents.agent_sdk import BaseAgent
from core.model import AgentRole

FORMAT_REMINDER = (
    "Reply with exactly one JSON object and nothing else. The object has a single key "
    "\"subtasks\" holding a list; every item has the keys \"id\" (unique string), "
    "\"kind\" (one of data_structures, logic_review, implement), \"description\" (text) "
    "and \"depends_on\" (list of ids of earlier subtasks)."
)


class PrefrontalAgent(BaseAgent):
    """
    High-level planning. Breaks the objective into data-structure, logic-review
    and implementation subtasks and returns them as a JSON plan.
    """
    role = AgentRole.PREFRONTAL
    template = """
        Generate a high-level design for the following programming objective.

        Objective:
        {description}

        Detail the classes, methods and interactions the program needs and split the work
        into subtasks for a data-structure specialist, a logic reviewer and implementers.
        Describe each subtask in prose inside its description field.

        Output format: reply with exactly one JSON object and nothing else. The object has a
        single key "subtasks" holding a list; every item has the keys "id" (unique string),
        "kind" (one of data_structures, logic_review, implement), "description" (text) and
        "depends_on" (list of ids of earlier subtasks).

        Feedback from the previous attempt:
        {failure_summary}
    """
