from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=30)
settings.load_profile("suite")
