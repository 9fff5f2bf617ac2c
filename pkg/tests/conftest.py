from hypothesis import settings

# first calls pay numba compilation, so wall-clock deadlines are meaningless
settings.register_profile("default", deadline=None)
settings.load_profile("default")
