"""
A utility for dynamically discovering and loading agent modules.

To add a new agent, create a Python file in the `agents` directory that
contains a class inheriting from `BaseAgent`. This loader will automatically
find it and register it under its role.
"""

import importlib
import inspect
import logging
import os
import pkgutil
from typing import Dict, Mapping, Optional, Type

from agents.agent_sdk import BaseAgent
from core.model import AgentRole, Task

logger = logging.getLogger(__name__)


def get_agent_class_map() -> Dict[AgentRole, Type[BaseAgent]]:
    """
    Dynamically discovers and returns a map of all available agent classes,
    keyed by role. It scans the 'agents' directory for modules containing
    BaseAgent subclasses.
    """
    agent_map: Dict[AgentRole, Type[BaseAgent]] = {}
    agents_path = os.path.dirname(os.path.abspath(__file__))

    for _, name, _ in pkgutil.iter_modules([agents_path]):
        try:
            module = importlib.import_module(f'agents.{name}')
            for _, obj in inspect.getmembers(module, inspect.isclass):
                if issubclass(obj, BaseAgent) and obj is not BaseAgent and not inspect.isabstract(obj):
                    if obj.role in agent_map and agent_map[obj.role] is not obj:
                        logger.warning(f"Agent {obj.__name__} overrides {agent_map[obj.role].__name__} "
                                       f"for role {obj.role.value}")
                    agent_map[obj.role] = obj
        except Exception as e:
            logger.error(f"Could not load agent from {name}: {e}")

    return agent_map


AGENT_CLASS_MAP = get_agent_class_map()


def load_agent_class(role: AgentRole) -> Optional[Type[BaseAgent]]:
    """Loads an agent class by its role."""
    return AGENT_CLASS_MAP.get(AgentRole(role))


def create_agent(role: AgentRole, backend=None) -> BaseAgent:
    agent_class = load_agent_class(role)
    if agent_class is None:
        raise KeyError(f"No agent class registered for role '{AgentRole(role).value}'.")
    return agent_class(backend)


def render_prompt(role: AgentRole, task: Task, board_view: Mapping[str, str], failure_summary: str = "") -> str:
    """
    Renders the prompt of `role` for `task` against a blackboard view.

    Raises:
        MissingContextError: an upstream artifact the role needs is not on the board.
    """
    return create_agent(role).render_prompt(task, board_view, failure_summary)
