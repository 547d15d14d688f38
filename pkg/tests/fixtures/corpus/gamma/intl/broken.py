import openai

def broken(:
    pass

greeting_prompt = "Say hello kindly."
