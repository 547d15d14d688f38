import openai

completion = openai.Completion.create(
    model="text-davinci-002",
    prompt="Translate to French: {text}",
    max_tokens=100,
)
chat = openai.ChatCompletion.create(
    model="gpt-3.5-turbo",
    temperature=0.7,
    messages=[
        {"role": "system", "content": "You translate text."},
        {"role": "user", "content": "Good morning"},
    ],
)
