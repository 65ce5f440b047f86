"""
Defines the Software Development Kit (SDK) for the role-specialized
generation agents.

An agent is a prompt pipeline over a pluggable backend: it selects the
blackboard entries its role depends on, renders its template and hands the
prompt to the backend. To add a new agent, create a module in the `agents`
package with a class inheriting from `BaseAgent`; the loader registers it by
its role.
"""
import logging
import textwrap
from abc import ABC
from typing import Dict, Mapping, Optional, Tuple

from langchain_core.prompts import PromptTemplate

from comms.blackboard import task_key
from core.exceptions import MissingContextError
from core.model import PLAN_TASK_ID, AgentRole, ContentKind, Task

logger = logging.getLogger(__name__)

NONE_TEXT = "(none)"
PLAN_KEY = task_key(PLAN_TASK_ID, ContentKind.PLAN.value)


def _collect(board_view: Mapping[str, str], content_kind: ContentKind) -> str:
    """Joins every '<task_id>/<content_kind>' entry in key order, or '(none)'."""
    suffix = f"/{content_kind.value}"
    parts = [f"[{key[:-len(suffix)]}]\n{value}" for key, value in sorted(board_view.items())
             if key.endswith(suffix)]
    return "\n\n".join(parts) if parts else NONE_TEXT


class BaseAgent(ABC):
    """
    The abstract base class for all cortical agents.

    Subclasses set `role`, `template` and `required_keys`. Templates may only
    use the placeholders {description}, {plan}, {schema}, {review} and
    {failure_summary}; literal braces are not allowed in templates.
    """
    role: AgentRole
    template: str
    # Blackboard keys that must be present before the prompt can be rendered.
    required_keys: Tuple[str, ...] = ()

    def __init__(self, backend=None):
        self.backend = backend
        self._prompt = PromptTemplate.from_template(textwrap.dedent(self.template).strip())

    @classmethod
    def get_description(cls) -> str:
        """Returns the agent's description from its docstring."""
        doc = cls.__doc__
        if not doc:
            return "No description available."
        return textwrap.dedent(doc).strip()

    @property
    def placeholders(self) -> Tuple[str, ...]:
        return tuple(self._prompt.input_variables)

    def build_context(self, task: Task, board_view: Mapping[str, str],
                      failure_summary: str = "") -> Dict[str, str]:
        """
        Values for every placeholder the template uses.

        Raises:
            MissingContextError: a required blackboard key is absent.
        """
        for key in self.required_keys:
            if key not in board_view:
                raise MissingContextError(key)
        available = {
            "description": task.description,
            "plan": board_view.get(PLAN_KEY, NONE_TEXT),
            "schema": _collect(board_view, ContentKind.SCHEMA),
            "review": _collect(board_view, ContentKind.REVIEW),
            "failure_summary": failure_summary or NONE_TEXT,
        }
        return {name: available[name] for name in self.placeholders}

    def render_prompt(self, task: Task, board_view: Mapping[str, str], failure_summary: str = "") -> str:
        context = self.build_context(task, board_view, failure_summary)
        return self._prompt.format(**context)

    def run(self, task: Task, board_view: Mapping[str, str], failure_summary: str = "",
            prompt: Optional[str] = None):
        """Renders the prompt (unless given) and invokes the backend. Returns an AgentOutput."""
        if self.backend is None:
            raise RuntimeError(f"{type(self).__name__} has no backend attached.")
        prompt = prompt if prompt is not None else self.render_prompt(task, board_view, failure_summary)
        logger.debug(f"{self.role.value} agent invoking backend for task '{task.task_id}' ({len(prompt)} chars)")
        return self.backend.invoke(prompt, self.role, task)
