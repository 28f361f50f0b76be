"""Sandbox wrapping of external repositories as executor bindings"""

from .backends import BuildBackend, DockerBackend, SandboxSpec, ScriptedBackend
from .profile import RepositoryProfile, load_repository_profile, profile_repository
from .setup import (EXTERNAL_PREFIX, PROFILE_BINDING, REGISTER_BINDING, SANDBOX_BINDING, ExternalAgentExecutor,
                    RepositorySetup, SetupStepExecutor)
from .wrapper import (BuildReport, BuildRound, ContainerExecutor, ExecutorBindings, classify_log,
                      draft_sandbox, missing_dependencies, register_executor, register_tool,
                      smoke_test, synthesize_sandbox)

__all__ = ['BuildBackend', 'DockerBackend', 'SandboxSpec', 'ScriptedBackend', 'RepositoryProfile',
           'load_repository_profile', 'profile_repository', 'EXTERNAL_PREFIX', 'PROFILE_BINDING',
           'REGISTER_BINDING', 'SANDBOX_BINDING', 'ExternalAgentExecutor', 'RepositorySetup',
           'SetupStepExecutor', 'BuildReport', 'BuildRound', 'ContainerExecutor', 'ExecutorBindings',
           'classify_log', 'draft_sandbox', 'missing_dependencies', 'register_executor', 'register_tool',
           'smoke_test', 'synthesize_sandbox']
