import os
import shutil

PARTIAL = ".partial"
QUARANTINE = ".quarantine"


def make_directory(path):
    if not os.path.isdir(path):
        os.makedirs(path)
    return path


def stage_paths(output_dir, stage):
    """(partial, final, quarantine) directories of a stage."""
    final = os.path.join(output_dir, stage)
    return final + PARTIAL, final, final + QUARANTINE


def open_stage(output_dir, stage):
    """Fresh ``<stage>.partial`` directory to write a stage's outputs into."""
    make_directory(output_dir)
    partial, _, _ = stage_paths(output_dir, stage)
    if os.path.isdir(partial):
        shutil.rmtree(partial)
    return make_directory(partial)


def _replace(source, destination):
    if os.path.isdir(destination):
        shutil.rmtree(destination)
    os.replace(source, destination)
    return destination


def commit_stage(output_dir, stage):
    partial, final, quarantine = stage_paths(output_dir, stage)
    if os.path.isdir(quarantine):
        shutil.rmtree(quarantine)
    return _replace(partial, final)


def quarantine_stage(output_dir, stage):
    partial, _, quarantine = stage_paths(output_dir, stage)
    if not os.path.isdir(partial):
        return None
    return _replace(partial, quarantine)
