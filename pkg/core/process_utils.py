import os
import shlex
import signal
import subprocess
import sys
from dataclasses import dataclass
from subprocess import TimeoutExpired
from typing import List, Sequence


@dataclass(frozen=True)
class CommandResult:
    returncode: int
    output: str
    timed_out: bool = False


def split_command(command: str, extra_args: Sequence[str] = ()) -> List[str]:
    """Splits a configured command line and appends extra arguments."""
    return shlex.split(command, posix=(sys.platform != "win32")) + list(extra_args)


def run_command_with_input(command_args: Sequence[str], stdin_text: str, timeout_s: float) -> CommandResult:
    """
    Runs a command with `stdin_text` on standard input and waits for it.

    The child runs in its own process group so a timeout can take down the
    whole tree, not only the direct child.

    Raises:
        OSError: the command could not be spawned (e.g. executable not found).
    """
    creationflags = 0
    start_new_session = False
    if sys.platform == "win32":
        creationflags = subprocess.CREATE_NEW_PROCESS_GROUP
    else:
        start_new_session = True

    process = subprocess.Popen(
        list(command_args),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,  # Combined output, it only ends up in check details.
        creationflags=creationflags,
        start_new_session=start_new_session,
    )
    try:
        output_bytes, _ = process.communicate(input=stdin_text.encode("utf-8"), timeout=timeout_s)
    except TimeoutExpired:
        terminate_process_tree(process)
        output_bytes, _ = process.communicate()
        return CommandResult(returncode=process.returncode if process.returncode is not None else -1,
                             output=output_bytes.decode("utf-8", errors="replace"), timed_out=True)
    return CommandResult(returncode=process.returncode, output=output_bytes.decode("utf-8", errors="replace"))


def terminate_process_tree(process):
    """Terminates a process and its entire process tree robustly."""
    if process is None:
        return
    try:
        if sys.platform == "win32":
            process.send_signal(signal.CTRL_BREAK_EVENT)
        else:
            os.killpg(os.getpgid(process.pid), signal.SIGKILL)
    except (ProcessLookupError, OSError):
        # The process may have already finished or been killed.
        pass
